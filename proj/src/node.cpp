#include "servnet/node.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>

#include "servnet/codec_util.hpp"
#include "servnet/error.hpp"

namespace servnet {
namespace {

std::string default_base_uri(const NodeConfig& cfg) {
  if (!cfg.base_uri.empty()) return cfg.base_uri;
  return "http://" + cfg.listen_host + ":" + std::to_string(cfg.listen_port);
}

std::optional<std::size_t> parse_index(const std::optional<std::string>& text) {
  if (!text || text->empty()) return std::nullopt;
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), v);
  if (ec != std::errc{} || ptr != text->data() + text->size()) return std::nullopt;
  return v;
}

HttpResponse plain(int status, std::string body) {
  HttpResponse r;
  r.status = status;
  r.body = std::move(body);
  r.content_type = "text/plain";
  return r;
}

bool constructor_matches(const std::vector<ParamSpec>& params, const std::vector<Value>& args) {
  if (params.size() != args.size()) return false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!matches_tag(args[i], params[i].type)) return false;
  }
  return true;
}

}  // namespace

std::optional<std::string> find_header(const std::map<std::string, std::string>& headers, std::string_view name) {
  for (const auto& [k, v] : headers) {
    if (k.size() == name.size() &&
        std::equal(k.begin(), k.end(), name.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
        })) {
      return v;
    }
  }
  return std::nullopt;
}

Node::Node(NodeConfig config, ServiceKindRegistry kinds)
    : config_(std::move(config)),
      kinds_(std::move(kinds)),
      network_(default_base_uri(config_)),
      reassembly_(config_.reassembly_timeout),
      transport_(std::make_shared<HttpTransport>()),
      session_(codec::random_uuid()) {
  if (config_.packet_size < 1) fail(ErrorKind::InvalidConfig, "packet size must be at least 1");
  config_.base_uri = network_.base_uri();
  for (const auto& [name, class_name] : config_.kind_aliases) kinds_.alias(name, class_name);
}

std::string Node::next_message_id() {
  return session_ + "-" + std::to_string(++message_counter_);
}

Handle Node::register_service(const Handle& parent, const std::string& name, const meta::MetadataDoc& spec) {
  const auto* kind = kinds_.find(spec.class_name);
  if (!kind) fail(ErrorKind::UnknownServiceKind, "no service kind '" + spec.class_name + "'");

  std::vector<Value> args;
  for (const auto& c : spec.constructors) {
    if (c.args) {
      args = *c.args;
      break;
    }
  }
  const auto sig = std::find_if(kind->constructors.begin(), kind->constructors.end(),
                                [&](const auto& params) { return constructor_matches(params, args); });
  if (sig == kind->constructors.end()) {
    fail(ErrorKind::ConstructorMismatch, kind->class_name + " has no constructor taking " +
                                             std::to_string(args.size()) + " argument(s) of these types");
  }

  ServiceNode node;
  node.service = kind->factory(args);
  if (auto sid = meta::service_id_of(spec)) {
    node.sid = std::move(*sid);
  } else {
    node.sid.id = name;
    for (std::size_t i = 0; i < sig->size(); ++i) {
      if ((*sig)[i].name == "id" && !args[i].as_string().empty()) node.sid.id = args[i].as_string();
    }
  }
  auto& d = node.description;
  d.service_type = spec.service_type.empty() ? kind->service_type : spec.service_type;
  d.description = spec.description;
  if (d.description.empty()) d.description.push_back(xml::Element::make_text(kind->description));
  for (const auto& e : spec.other_meta) {
    if (e.name != meta::kServiceIdElement) d.other_meta.push_back(e);
  }
  d.class_name = kind->class_name;
  d.archive_uris = spec.archive_uris;
  for (const auto& params : kind->constructors) {
    ConstructorDescriptor c{params, std::nullopt};
    if (&params == &*sig) c.args = args;
    d.constructors.push_back(std::move(c));
  }
  d.uuid = codec::random_uuid();

  std::lock_guard lock(registration_mutex_);
  meta::check_shared_candidate(network_, node, std::nullopt);
  return network_.add_nested(parent, name, std::move(node));
}

Handle Node::register_kind(const Handle& parent, const std::string& name, const std::string& class_name,
                           std::vector<Value> args, std::optional<ServiceId> sid) {
  meta::MetadataDoc spec;
  spec.class_name = class_name;
  ConstructorDescriptor c;
  for (const auto& a : args) c.params.push_back({"", std::string(type_tag(a.type()))});
  c.args = std::move(args);
  spec.constructors.push_back(std::move(c));
  if (sid) spec.other_meta.push_back(meta::service_id_element(*sid));
  return register_service(parent, name, spec);
}

void Node::unregister(const Handle& service) {
  std::lock_guard lock(registration_mutex_);
  network_.remove_nested(service);
}

wire::ParamValue Node::dispatch(const wire::CallEnvelope& envelope) {
  const auto node = network_.resolve_handle(envelope.target);
  if (!node->service) fail(ErrorKind::UnknownService, "no service object at '" + envelope.target.path_string() + "'");
  auto& service = *node->service;
  if (!service.methods().contains(envelope.method)) {
    fail(ErrorKind::UnknownMethod, "'" + envelope.target.path_string() + "' has no method '" + envelope.method + "'");
  }
  const auto cfg = network_.read([&](const ServiceNode&) { return node->access; });
  if (cfg && access::authorize(*cfg, envelope.method, envelope.credential.value_or("")) == access::Decision::Deny) {
    fail(ErrorKind::AccessDenied, "credential does not open '" + envelope.method + "' on '" +
                                      envelope.target.path_string() + "'");
  }

  std::vector<Value> args;
  args.reserve(envelope.params.size());
  for (const auto& p : envelope.params) args.push_back(p.value);
  CallContext ctx{envelope.target, this};
  Value result;
  {
    std::lock_guard exec(service.exec_mutex());
    result = service.invoke(ctx, envelope.method, args);
  }
  ++calls_dispatched_;
  return wire::encode_param_auto(std::move(result));
}

wire::ParamValue Node::call(const Handle& target, const std::string& method, std::vector<wire::ParamValue> params,
                            std::optional<std::string> credential) {
  if (target.base_uri != base_uri()) return call_remote(target, method, std::move(params), std::move(credential));
  return dispatch(wire::CallEnvelope{next_message_id(), target, method, std::move(params), std::move(credential), {}});
}

wire::ParamValue Node::call_remote(const Handle& target, const std::string& method,
                                   std::vector<wire::ParamValue> params, std::optional<std::string> credential) {
  wire::CallEnvelope envelope{next_message_id(), target, method, std::move(params), std::move(credential), {}};
  const auto bytes = wire::encode_envelope(envelope);
  const auto packets = wire::split_packets(envelope.message_id, bytes, config_.packet_size);
  std::shared_ptr<Transport> transport;
  {
    std::lock_guard lock(mutex_);
    transport = transport_;
  }

  auto send = [&](HttpRequest request) {
    auto response = transport->post(target.base_uri, request);
    ++packets_sent_;
    return response;
  };

  HttpResponse last;
  for (const auto& p : packets) {
    HttpRequest request;
    request.headers = {{kHeaderMsgId, p.message_id},
                       {kHeaderPktIndex, std::to_string(p.index)},
                       {kHeaderPktTotal, std::to_string(p.total)}};
    request.body = p.payload;
    last = send(std::move(request));
    const bool final = p.index + 1 == p.total;
    if (last.status != (final ? 200 : 202)) {
      fail(ErrorKind::TransportError, "node " + target.base_uri + " answered " + std::to_string(last.status) +
                                          " to packet " + std::to_string(p.index) + ": " + last.body);
    }
  }

  const auto total = parse_index(find_header(last.headers, kHeaderPktTotal));
  const auto first_index = parse_index(find_header(last.headers, kHeaderPktIndex));
  if (!total || *total < 1 || first_index != 0u) fail(ErrorKind::TransportError, "reply without packet framing");
  std::vector<wire::Packet> reply{{envelope.message_id, 0, *total, last.body}};
  for (std::size_t i = 1; i < *total; ++i) {
    HttpRequest request;
    request.headers = {{kHeaderMsgId, envelope.message_id}, {kHeaderReplyPkt, std::to_string(i)}};
    auto response = send(std::move(request));
    if (response.status != 200) {
      fail(ErrorKind::TransportError, "reply packet " + std::to_string(i) + " unavailable: " + response.body);
    }
    reply.push_back({envelope.message_id, i, *total, std::move(response.body)});
  }

  const auto decoded = wire::decode_reply(wire::reassemble_packets(reply));
  if (!decoded.ok()) {
    throw Error(ErrorKind::RemoteFault, decoded.fault_kind,
                std::string(to_string(decoded.fault_kind)) + ": " + decoded.fault_message);
  }
  return *decoded.result;
}

MethodTable Node::describe_methods(const Handle& service) const {
  const auto node = network_.resolve_handle(service);
  return network_.read([&](const ServiceNode&) { return meta::effective_methods(*node); });
}

meta::MetadataDoc Node::metadata(const Handle& service) const { return meta::generate_metadata(network_, service); }

void Node::install_config(const Handle& service, access::AccessConfig config) {
  const auto node = network_.resolve_handle(service);
  access::validate(config);
  access::check_covers(config, node->service ? node->service->methods() : MethodTable{});
  auto snapshot = std::make_shared<const access::AccessConfig>(std::move(config));
  network_.update(service, [&](ServiceNode& n) { n.access = std::move(snapshot); });
}

void Node::apply_admin_doc(const Handle& service, const meta::AdminDoc& doc) {
  const auto known = autonomic_manager_kinds();
  for (const auto& m : doc.autonomic_managers) {
    if (!known.contains(m)) fail(ErrorKind::InvalidAdminDoc, "admin document: unknown autonomic manager '" + m + "'");
  }
  meta::apply_admin_doc(network_, service, doc);
}

void Node::add_autonomic_manager_kind(std::string name) {
  std::lock_guard lock(mutex_);
  manager_kinds_.insert(std::move(name));
}

std::set<std::string> Node::autonomic_manager_kinds() const {
  std::lock_guard lock(mutex_);
  return manager_kinds_;
}

void Node::set_transport(std::shared_ptr<Transport> transport) {
  std::lock_guard lock(mutex_);
  transport_ = std::move(transport);
}

Node::Stats Node::stats() const {
  return Stats{packets_received_.load(), packets_sent_.load(), calls_dispatched_.load()};
}

std::string Node::process_message(const std::string& bytes) {
  wire::ReplyEnvelope reply;
  try {
    const auto envelope = wire::decode_envelope(bytes);
    reply.message_id = envelope.message_id;
    reply.result = dispatch(envelope);
  } catch (const Error& err) {
    reply.result.reset();
    reply.fault_kind = err.kind() == ErrorKind::RemoteFault && err.remote_kind() ? *err.remote_kind() : err.kind();
    reply.fault_message = err.what();
  } catch (const std::exception& err) {
    reply.result.reset();
    reply.fault_kind = ErrorKind::MethodFault;
    reply.fault_message = err.what();
  }
  return wire::encode_reply(reply);
}

HttpResponse Node::packet_response(const wire::Packet& packet) const {
  HttpResponse r;
  r.headers = {{kHeaderMsgId, packet.message_id},
               {kHeaderPktIndex, std::to_string(packet.index)},
               {kHeaderPktTotal, std::to_string(packet.total)}};
  r.body = packet.payload;
  return r;
}

HttpResponse Node::serve_reply_packet(const std::string& id, const std::string& index_text) {
  const auto index = parse_index(index_text);
  std::lock_guard lock(mutex_);
  const auto it = replies_.find(id);
  if (!index || it == replies_.end() || *index >= it->second.packets.size()) {
    return plain(404, "no reply packet " + index_text + " for message " + id);
  }
  auto& entry = it->second;
  auto response = packet_response(entry.packets[*index]);
  entry.served.insert(*index);
  if (entry.served.size() == entry.packets.size()) replies_.erase(it);
  return response;
}

HttpResponse Node::receive_packet(const HttpRequest& request) {
  ++packets_received_;
  const auto now = wire::ReassemblyBuffer::Clock::now();
  reassembly_.expire(now);
  {
    std::lock_guard lock(mutex_);
    std::erase_if(replies_, [&](const auto& kv) { return now - kv.second.created > config_.reassembly_timeout; });
  }

  const auto id = find_header(request.headers, kHeaderMsgId);
  if (!id || id->empty()) return plain(400, "missing X-Msg-Id");
  if (const auto pull = find_header(request.headers, kHeaderReplyPkt)) return serve_reply_packet(*id, *pull);

  const auto index = parse_index(find_header(request.headers, kHeaderPktIndex));
  const auto total = parse_index(find_header(request.headers, kHeaderPktTotal));
  if (!index || !total || *total < 1 || *index >= *total) return plain(400, "bad packet framing headers");

  std::optional<std::string> message;
  try {
    message = reassembly_.insert(wire::Packet{*id, *index, *total, request.body}, now);
  } catch (const Error& err) {
    return plain(409, err.what());
  }
  if (!message) return plain(202, "");

  const auto reply = wire::split_packets(*id, process_message(*message), config_.packet_size);
  if (reply.size() > 1) {
    std::lock_guard lock(mutex_);
    replies_[*id] = ReplyEntry{reply, {0}, now};
  }
  return packet_response(reply.front());
}

}  // namespace servnet

namespace servnet {

void LoopbackTransport::attach(Node& node) {
  std::lock_guard lock(mutex_);
  nodes_[node.base_uri()] = &node;
}

void LoopbackTransport::detach(const std::string& base_uri) {
  std::lock_guard lock(mutex_);
  nodes_.erase(base_uri);
}

HttpResponse LoopbackTransport::post(const std::string& base_uri, const HttpRequest& request) {
  Node* node = nullptr;
  {
    std::lock_guard lock(mutex_);
    const auto it = nodes_.find(base_uri);
    if (it != nodes_.end()) node = it->second;
  }
  if (!node) fail(ErrorKind::TransportError, "no node listening at " + base_uri);
  if (request.path != kCallPath) return HttpResponse{404, {}, "unknown path", "text/plain"};
  return node->receive_packet(request);
}

}  // namespace servnet
