#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "servnet/access.hpp"
#include "servnet/config.hpp"
#include "servnet/kinds.hpp"
#include "servnet/metadata.hpp"
#include "servnet/network.hpp"
#include "servnet/packet.hpp"
#include "servnet/transport.hpp"
#include "servnet/wire.hpp"

namespace servnet {

/// Base server of one network. Every service method runs through
/// dispatch(); services never receive calls any other way. Also acts as the
/// client for calls to other nodes.
class Node : public Caller {
 public:
  explicit Node(NodeConfig config, ServiceKindRegistry kinds = ServiceKindRegistry::with_builtins());

  const NodeConfig& config() const noexcept { return config_; }
  const std::string& base_uri() const noexcept { return network_.base_uri(); }
  Network& network() noexcept { return network_; }
  const Network& network() const noexcept { return network_; }
  const ServiceKindRegistry& kinds() const noexcept { return kinds_; }
  Handle root() const { return network_.root_handle(); }

  /// Builds a service from a factory document naming its Class_Name and
  /// (optionally) the constructor arguments, then nests it under parent.
  /// Throws UnknownServiceKind, ConstructorMismatch, DuplicateChildName,
  /// SharedIdConflict.
  Handle register_service(const Handle& parent, const std::string& name, const meta::MetadataDoc& factory_spec);
  Handle register_kind(const Handle& parent, const std::string& name, const std::string& class_name,
                       std::vector<Value> args = {}, std::optional<ServiceId> sid = std::nullopt);
  void unregister(const Handle& service);

  /// Throws UnknownService, UnknownMethod, AccessDenied, MethodFault.
  wire::ParamValue dispatch(const wire::CallEnvelope& envelope);

  /// Local dispatch for this node's handles, call_remote otherwise.
  wire::ParamValue call(const Handle& target, const std::string& method,
                        std::vector<wire::ParamValue> params,
                        std::optional<std::string> credential = std::nullopt) override;

  /// Always goes through the transport, even for this node. Throws
  /// TransportError or RemoteFault (carrying the remote error kind).
  wire::ParamValue call_remote(const Handle& target, const std::string& method,
                               std::vector<wire::ParamValue> params,
                               std::optional<std::string> credential = std::nullopt);

  MethodTable describe_methods(const Handle& service) const;
  meta::MetadataDoc metadata(const Handle& service) const;

  /// Throws UncoveredMethod, InvalidConfig, UnknownService.
  void install_config(const Handle& service, access::AccessConfig config);
  /// Also validates Autonomic_Manager names against the known kinds.
  void apply_admin_doc(const Handle& service, const meta::AdminDoc& doc);

  void add_autonomic_manager_kind(std::string name);
  std::set<std::string> autonomic_manager_kinds() const;

  /// Server side of POST /call: one packet in, 202 until the message is
  /// complete, then the first reply packet. Requests carrying X-Reply-Pkt
  /// fetch the remaining reply packets.
  HttpResponse receive_packet(const HttpRequest& request);

  void set_transport(std::shared_ptr<Transport> transport);

  struct Stats {
    std::uint64_t packets_received = 0;
    std::uint64_t packets_sent = 0;
    std::uint64_t calls_dispatched = 0;
  };
  Stats stats() const;

  std::string next_message_id();

 private:
  struct ReplyEntry {
    std::vector<wire::Packet> packets;
    std::set<std::size_t> served;
    wire::ReassemblyBuffer::Clock::time_point created;
  };

  HttpResponse serve_reply_packet(const std::string& id, const std::string& index_text);
  HttpResponse packet_response(const wire::Packet& packet) const;
  std::string process_message(const std::string& bytes);

  NodeConfig config_;
  ServiceKindRegistry kinds_;
  Network network_;
  wire::ReassemblyBuffer reassembly_;
  std::shared_ptr<Transport> transport_;
  std::string session_;

  mutable std::mutex mutex_;  // guards reply cache, manager kinds, transport
  std::mutex registration_mutex_;
  std::map<std::string, ReplyEntry> replies_;
  std::set<std::string> manager_kinds_;

  std::atomic<std::uint64_t> message_counter_{0};
  std::atomic<std::uint64_t> packets_received_{0};
  std::atomic<std::uint64_t> packets_sent_{0};
  std::atomic<std::uint64_t> calls_dispatched_{0};
};

/// Case-insensitive header lookup.
std::optional<std::string> find_header(const std::map<std::string, std::string>& headers, std::string_view name);

}  // namespace servnet

namespace servnet {

/// In-process transport that hands packets straight to registered nodes.
/// Exercises the full packet protocol without sockets.
class LoopbackTransport : public Transport {
 public:
  void attach(Node& node);
  void detach(const std::string& base_uri);
  HttpResponse post(const std::string& base_uri, const HttpRequest& request) override;

 private:
  std::mutex mutex_;
  std::map<std::string, Node*> nodes_;
};

}  // namespace servnet
