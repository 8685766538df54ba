#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "servnet/access.hpp"
#include "servnet/handle.hpp"
#include "servnet/service.hpp"
#include "servnet/xml.hpp"

namespace servnet {

struct ServiceId {
  std::string id;
  bool shared = false;  // utility identity: every instance has the same public metadata

  bool operator==(const ServiceId&) const = default;
};

enum class LinkKind { Nesting, Permanent, Dynamic, Association };

/// Descriptive fields kept per service; the full metadata document is
/// generated from these plus the service's position in the tree.
struct ServiceDescription {
  std::string service_type;
  std::vector<xml::Element> description;
  std::vector<xml::Element> other_meta;
  std::vector<xml::Element> private_meta;  // never serialized into public documents
  std::string class_name;
  std::vector<std::string> archive_uris;
  std::vector<ConstructorDescriptor> constructors;
  std::string uuid;

  bool operator==(const ServiceDescription&) const = default;
};

struct ServiceNode {
  ServiceId sid;
  std::map<std::string, std::shared_ptr<ServiceNode>> children;
  std::vector<Handle> permanent_links;   // directed, insertion ordered, no duplicates
  std::vector<std::string> associations;  // insertion ordered, no duplicates
  ServiceDescription description;
  std::shared_ptr<Service> service;
  std::shared_ptr<const access::AccessConfig> access;  // null: every method open
  std::vector<std::string> autonomic_managers;
};

/// The tree of nested services hosted by one node. Mutations take a single
/// writer lock; reads may run concurrently.
class Network {
 public:
  explicit Network(std::string base_uri);

  const std::string& base_uri() const noexcept { return base_uri_; }
  Handle root_handle() const { return Handle{base_uri_, {}}; }

  /// Throws UnknownParent, ForeignNode, InvalidServiceName, DuplicateChildName.
  Handle add_nested(const Handle& parent, std::string name, ServiceNode node);
  /// Removes a service with its subtree and drops permanent links into it.
  void remove_nested(const Handle& h);

  /// Throws UnknownService or ForeignNode. Mutable fields of the returned
  /// node are only coherent when read through read().
  std::shared_ptr<const ServiceNode> resolve_handle(const Handle& h) const;
  bool contains(const Handle& h) const;

  /// Throws CrossNetworkPermanentLink, ForeignNode, UnknownService.
  void link_permanent(const Handle& a, const Handle& b, bool create);
  /// Throws UnknownService, ForeignNode, MalformedUri.
  void add_association(const Handle& s, const std::string& uri);

  std::vector<Handle> permanent_links(const Handle& s) const;
  std::vector<std::string> associations(const Handle& s) const;
  std::vector<std::string> children(const Handle& parent) const;
  /// Every service handle in breadth-first nesting order.
  std::vector<Handle> all_services() const;

  /// Runs fn(const ServiceNode& root) under the shared lock.
  template <class Fn>
  decltype(auto) read(Fn&& fn) const {
    std::shared_lock lock(mutex_);
    return fn(static_cast<const ServiceNode&>(root_));
  }

  /// Runs fn(ServiceNode& node) on one service under the writer lock.
  template <class Fn>
  decltype(auto) update(const Handle& h, Fn&& fn) {
    std::unique_lock lock(mutex_);
    auto& node = find_service(h);
    ++version_;
    return fn(node);
  }

  /// Counter bumped by every mutation.
  std::uint64_t version() const noexcept { return version_.load(); }

  /// Lookup within a tree while the caller holds the lock (from read()).
  static const ServiceNode* find_in(const ServiceNode& root, const std::vector<std::string>& path) noexcept;

 private:
  ServiceNode& find_service(const Handle& h) const;
  void check_local(const Handle& h) const;

  std::string base_uri_;
  mutable std::shared_mutex mutex_;
  ServiceNode root_;
  std::atomic<std::uint64_t> version_{0};
};

}  // namespace servnet
