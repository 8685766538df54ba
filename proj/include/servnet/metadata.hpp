#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "servnet/access.hpp"
#include "servnet/handle.hpp"
#include "servnet/network.hpp"
#include "servnet/service.hpp"
#include "servnet/xml.hpp"

namespace servnet::meta {

/// Service_Meta document. Top-level element order is fixed; see
/// schemas/service_meta.xsd for the content models.
struct MetadataDoc {
  std::string service_type;
  std::vector<xml::Element> description;
  std::vector<xml::Element> other_meta;
  std::string class_name;
  Handle handle;
  std::vector<std::string> archive_uris;  // Jar_File entries, carried opaquely
  std::vector<ConstructorDescriptor> constructors;
  MethodTable methods;
  std::vector<MetadataDoc> child_meta;
  std::vector<MetadataDoc> link_meta;
  std::optional<std::string> uuid;

  bool operator==(const MetadataDoc&) const = default;
};

/// The service identity is carried inside Other_Meta as
/// `<Service_ID shared="true|false">id</Service_ID>`.
inline constexpr std::string_view kServiceIdElement = "Service_ID";
xml::Element service_id_element(const ServiceId& sid);
std::optional<ServiceId> service_id_of(const MetadataDoc& doc);

/// Builds the document for a registered service: fields from its
/// registration info, methods from its table, child metadata recursively
/// and shallow documents for its permanent link targets.
MetadataDoc generate_metadata(const Network& network, const Handle& service);
/// Same, for a node the caller already holds under Network::read().
MetadataDoc generate_metadata(const ServiceNode& node, const Handle& handle, const ServiceNode& root);

/// The service's method table with installed access groups applied.
MethodTable effective_methods(const ServiceNode& node);

std::string encode_metadata(const MetadataDoc& doc);
/// Throws Error(SchemaViolation).
MetadataDoc decode_metadata(std::string_view bytes);
xml::Element metadata_to_xml(const MetadataDoc& doc);
MetadataDoc metadata_from_xml(const xml::Element& element);

/// The part of a document that must be identical across instances of a
/// shared service ID: type, description, other metadata, class name,
/// constructor signatures and methods.
std::string public_static_metadata(const MetadataDoc& doc);

/// Throws Error(SharedIdConflict) when another live service with the same
/// shared ID publishes different public static metadata.
void check_shared_consistency(const Network& network, const Handle& service);
/// Same check for a node not yet (or about to be re-) installed at `self`.
void check_shared_candidate(const Network& network, const ServiceNode& candidate,
                            const std::optional<Handle>& self);

// Where metadata may be stored.
enum class Target { This, Other };
enum class Visibility { Public, Private };
enum class Volatility { Static, Dynamic };

struct MutationRequest {
  Target target = Target::This;
  Visibility visibility = Visibility::Public;
  Volatility volatility = Volatility::Static;
  ServiceId sid;
};

/// False only for dynamic public metadata stored on a shared-ID service itself.
bool check_mutation_allowed(const MutationRequest& req) noexcept;

/// Administrator-supplied initialisation for one service.
struct AdminDoc {
  std::optional<std::string> service_type;
  std::optional<std::vector<xml::Element>> description;
  std::optional<access::AccessConfig> access;
  std::vector<std::string> autonomic_managers;
  std::vector<xml::Element> extra_meta;
  std::vector<xml::Element> private_meta;
  std::optional<std::vector<xml::Element>> data;

  bool operator==(const AdminDoc&) const = default;
};

std::string encode_admin_doc(const AdminDoc& doc);
/// Throws Error(InvalidAdminDoc).
AdminDoc decode_admin_doc(std::string_view bytes);

/// Merges extra metadata into Other_Meta, installs the access config and
/// stores the data payload on the service. Throws Error(InvalidAdminDoc),
/// Error(SharedIdConflict), Error(UnknownService).
void apply_admin_doc(Network& network, const Handle& service, const AdminDoc& doc);

}  // namespace servnet::meta
