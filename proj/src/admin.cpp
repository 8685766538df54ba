#include "servnet/admin.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "servnet/codec_util.hpp"
#include "servnet/error.hpp"

namespace servnet::admin {

// ---------------------------------------------------------------------------
// Value <-> JSON

Json value_to_json(const Value& v) {
  switch (v.type()) {
    case Value::Type::Nil: return nullptr;
    case Value::Type::Bool: return v.as_bool();
    case Value::Type::Int: return v.as_int();
    case Value::Type::Float: {
      const double d = v.as_number();
      if (std::isnan(d)) return Json{{"$float", "nan"}};
      if (std::isinf(d)) return Json{{"$float", d > 0 ? "inf" : "-inf"}};
      return d;
    }
    case Value::Type::String: return v.as_string();
    case Value::Type::List: {
      Json out = Json::array();
      for (const auto& item : v.as_list()) out.push_back(value_to_json(item));
      return out;
    }
    case Value::Type::Map: {
      Json out = Json::object();
      for (const auto& [k, item] : v.as_map()) out[k] = value_to_json(item);
      if (v.as_map().size() == 1 && v.as_map().begin()->first.starts_with('$')) return Json{{"$map", out}};
      return out;
    }
    case Value::Type::Blob: return Json{{"$blob", codec::base64_encode(v.as_blob().bytes)}};
  }
  return nullptr;
}

Value value_from_json(const Json& j) {
  switch (j.type()) {
    case Json::value_t::null: return {};
    case Json::value_t::boolean: return j.get<bool>();
    case Json::value_t::number_integer: return j.get<std::int64_t>();
    case Json::value_t::number_unsigned: {
      const auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
        fail(ErrorKind::BadArgument, "integer out of range");
      }
      return static_cast<std::int64_t>(u);
    }
    case Json::value_t::number_float: return j.get<double>();
    case Json::value_t::string: return j.get<std::string>();
    case Json::value_t::array: {
      Value::List out;
      for (const auto& item : j) out.push_back(value_from_json(item));
      return out;
    }
    case Json::value_t::object: {
      if (j.size() == 1 && j.begin().key().starts_with('$')) {
        const auto& [tag, body] = std::pair{j.begin().key(), j.begin().value()};
        if (tag == "$blob" && body.is_string()) return Blob{codec::base64_decode(body.get<std::string>())};
        if (tag == "$float" && body.is_string()) {
          const auto s = body.get<std::string>();
          if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
          if (s == "inf") return std::numeric_limits<double>::infinity();
          if (s == "-inf") return -std::numeric_limits<double>::infinity();
        }
        if (tag == "$map" && body.is_object()) {
          Value::Map out;
          for (const auto& [k, item] : body.items()) out[k] = value_from_json(item);
          return out;
        }
        fail(ErrorKind::BadArgument, "malformed tagged value '" + tag + "'");
      }
      Value::Map out;
      for (const auto& [k, item] : j.items()) out[k] = value_from_json(item);
      return out;
    }
    default: fail(ErrorKind::BadArgument, "unsupported JSON value");
  }
}

Json handle_to_json(const Handle& h) { return Json{{"uri", h.base_uri}, {"path", h.path_string()}}; }

Handle handle_from_json(const Json& j, const std::string& base_uri) {
  if (j.is_string()) return Handle{base_uri, split_path(j.get<std::string>())};
  if (j.is_object() && j.contains("path") && j["path"].is_string()) {
    const auto uri = j.value("uri", base_uri);
    return Handle{uri, split_path(j["path"].get<std::string>())};
  }
  fail(ErrorKind::BadArgument, "a handle is a path string or {\"uri\", \"path\"}");
}

// ---------------------------------------------------------------------------
// Views

namespace {

Json view_node(const meta::MetadataDoc& doc, int level, int depth) {
  const auto sid = meta::service_id_of(doc);
  Json links = Json::array();
  for (const auto& l : doc.link_meta) links.push_back(handle_to_json(l.handle));
  Json node{{"name", doc.handle.path.empty() ? std::string() : doc.handle.path.back()},
            {"path", doc.handle.path_string()},
            {"sid", sid ? Json(sid->id) : Json(nullptr)},
            {"shared", sid && sid->shared},
            {"class", doc.class_name},
            {"type", doc.service_type},
            {"depth", level},
            {"links", links},
            {"child_count", doc.child_meta.size()}};
  Json children = Json::array();
  const bool cut = level >= depth && !doc.child_meta.empty();
  if (!cut) {
    for (const auto& c : doc.child_meta) children.push_back(view_node(c, level + 1, depth));
  }
  node["children"] = std::move(children);
  node["truncated"] = cut;
  return node;
}

}  // namespace

Json view_from_metadata(const meta::MetadataDoc& root, int depth) {
  if (depth < 1) fail(ErrorKind::BadArgument, "depth must be at least 1");
  return view_node(root, 0, depth);
}

bool is_view_prefix(const Json& shorter, const Json& longer) {
  for (const auto& [k, v] : shorter.items()) {
    if (k == "children" || k == "truncated") continue;
    if (!longer.contains(k) || longer.at(k) != v) return false;
  }
  if (shorter.size() != longer.size()) return false;
  const auto& a = shorter.at("children");
  const auto& b = longer.at("children");
  if (shorter.at("truncated").get<bool>()) return a.empty();
  if (longer.at("truncated").get<bool>() || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!is_view_prefix(a[i], b[i])) return false;
  }
  return true;
}

Json methods_to_json(const MethodTable& table) {
  Json out = Json::array();
  for (const auto& [name, m] : table) {
    Json params = Json::array();
    for (const auto& p : m.params) params.push_back({{"name", p.name}, {"type", p.type}});
    out.push_back({{"name", name}, {"params", params}, {"returns", m.returns}, {"access_group", m.access_group}});
  }
  return out;
}

Json dynamic_link_to_json(const autonomic::DynamicLink& link, int threshold) {
  return {{"source", handle_to_json(link.source)}, {"target", handle_to_json(link.target)},
          {"chain", link.chain},                   {"weight", link.weight},
          {"hits", link.hits},                     {"last_used", link.last_used},
          {"reliable", link.reliable(threshold)}};
}

Json experiment_report_to_json(const autonomic::ExperimentReport& r) {
  const auto& p = r.params;
  return {{"params",
           {{"n_services", p.n_services},
            {"n_queries", p.n_queries},
            {"seed", p.seed},
            {"n_keys", p.n_keys},
            {"holders_per_key", p.holders_per_key},
            {"test_queries", p.test_queries},
            {"zipf_s", p.zipf_s},
            {"update_rate", p.update_rate},
            {"threshold", p.threshold}}},
          {"nodes_visited_linked", r.nodes_visited_linked},
          {"nodes_visited_exhaustive", r.nodes_visited_exhaustive},
          {"quality_linked", r.quality_linked},
          {"quality_exhaustive", r.quality_exhaustive},
          {"reduction", r.reduction},
          {"quality_loss", r.quality_loss},
          {"links_formed", r.links_formed},
          {"reliable_links", r.reliable_links},
          {"report", autonomic::format_report(r)}};
}

autonomic::ExperimentParams experiment_params_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::BadArgument, "experiment parameters must be an object");
  autonomic::ExperimentParams p;
  static const std::set<std::string> known = {"n_services",   "n_queries", "seed",        "n_keys",   "holders_per_key",
                                              "test_queries", "zipf_s",    "update_rate", "threshold"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) fail(ErrorKind::BadArgument, "unknown experiment parameter '" + k + "'");
  }
  try {
    p.n_services = j.value("n_services", p.n_services);
    p.n_queries = j.value("n_queries", p.n_queries);
    p.seed = j.value("seed", p.seed);
    p.n_keys = j.value("n_keys", p.n_keys);
    p.holders_per_key = j.value("holders_per_key", p.holders_per_key);
    p.test_queries = j.value("test_queries", p.test_queries);
    p.zipf_s = j.value("zipf_s", p.zipf_s);
    p.update_rate = j.value("update_rate", p.update_rate);
    p.threshold = j.value("threshold", p.threshold);
  } catch (const Json::exception& e) {
    fail(ErrorKind::BadArgument, std::string("experiment parameters: ") + e.what());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Transaction scenarios

namespace {

Json txn_to_json(const trust::MediatedTransaction& t) {
  auto opt = [](const auto& o) { return o ? Json(o->key) : Json(nullptr); };
  return {{"txn_id", t.txn_id},
          {"state", trust::to_string(t.state)},
          {"escrow", opt(t.escrow)},
          {"provider_token", opt(t.provider_token)},
          {"refunded_token", opt(t.refunded_token)},
          {"result", t.result ? value_to_json(t.result->value) : Json(nullptr)},
          {"dispute_note", t.dispute_note ? Json(*t.dispute_note) : Json(nullptr)},
          {"result_from", handle_to_json(t.result_from)},
          {"client_notified", t.client_notified},
          {"release_count", t.release_count}};
}

}  // namespace

Json run_txn_scenario(const Json& scenario) {
  if (!scenario.is_object() || !scenario.contains("events") || !scenario["events"].is_array()) {
    fail(ErrorKind::BadArgument, "scenario needs an \"events\" array");
  }
  trust::MediatedTransaction start;
  start.txn_id = scenario.value("txn_id", std::string("txn-1"));
  start.client = Handle{"http://client.example", {"Client"}};
  start.provider = Handle{"http://provider.example", {"Provider"}};
  start.mediator = Handle{"http://mediator.example", {"Mediator"}};
  start.direct_delivery = scenario.value("direct_delivery", false);

  std::vector<trust::EventInput> events;
  for (const auto& e : scenario["events"]) {
    const auto name = e.is_string() ? e.get<std::string>() : e.value("event", std::string());
    const auto ev = trust::event_from_string(name);
    if (!ev) fail(ErrorKind::BadArgument, "unknown event '" + name + "'");
    trust::EventInput in{*ev, {}, {}, {}};
    if (e.is_object()) {
      if (e.contains("token")) in.token = trust::PaymentToken{e["token"].get<std::string>()};
      if (e.contains("result")) in.result = wire::encode_param_auto(value_from_json(e["result"]));
      if (e.contains("note")) in.note = e["note"].get<std::string>();
    }
    events.push_back(std::move(in));
  }
  const auto sim = trust::simulate(start, events);
  Json log = Json::array();
  for (const auto& l : sim.log) {
    log.push_back({{"step", l.step},
                   {"event", trust::to_string(l.event)},
                   {"from", trust::to_string(l.from)},
                   {"to", trust::to_string(l.to)},
                   {"escrow_held", l.escrow_held},
                   {"provider_sees_token", l.provider_sees_token},
                   {"client_notified", l.client_notified},
                   {"error", l.error ? Json(*l.error) : Json(nullptr)}});
  }
  return {{"final", txn_to_json(sim.final)}, {"log", log}, {"rejected", sim.rejected}};
}

// ---------------------------------------------------------------------------
// HTTP surface

int status_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::UnknownService:
    case ErrorKind::UnknownParent:
    case ErrorKind::UnknownRecord:
      return 404;
    case ErrorKind::CrossNetworkPermanentLink:
    case ErrorKind::DuplicateChildName:
    case ErrorKind::SharedIdConflict:
      return 409;
    case ErrorKind::AccessDenied:
      return 403;
    case ErrorKind::TransportError:
    case ErrorKind::RemoteFault:
    case ErrorKind::PeerUnreachable:
      return 502;
    case ErrorKind::EncodeError:
    case ErrorKind::MissingPacket:
      return 500;
    default:
      return 400;
  }
}

AdminApi::AdminApi(Node& node, autonomic::Engine& engine, std::string token)
    : node_(node), engine_(engine), token_(std::move(token)) {}

AdminApi::~AdminApi() = default;

Handle AdminApi::local(const std::string& path) const { return Handle{node_.base_uri(), split_path(path)}; }

Json AdminApi::info() const {
  const auto stats = node_.stats();
  Json kinds = Json::array();
  for (const auto& k : node_.kinds().class_names()) kinds.push_back(k);
  return {{"base_uri", node_.base_uri()},
          {"services", node_.network().all_services().size()},
          {"version", node_.network().version()},
          {"kinds", kinds},
          {"packet_size", node_.config().packet_size},
          {"stats",
           {{"packets_received", stats.packets_received},
            {"packets_sent", stats.packets_sent},
            {"calls_dispatched", stats.calls_dispatched}}}};
}

Json AdminApi::network_view(int depth) const {
  const auto doc = node_.network().read([&](const ServiceNode& root) {
    return meta::generate_metadata(root, node_.root(), root);
  });
  return view_from_metadata(doc, depth);
}

Json AdminApi::metadata(const Handle& service) const {
  meta::MetadataDoc doc;
  if (service.is_root()) {
    doc = node_.network().read(
        [&](const ServiceNode& root) { return meta::generate_metadata(root, node_.root(), root); });
  } else {
    doc = node_.metadata(service);
  }
  const auto sid = meta::service_id_of(doc);
  return {{"handle", handle_to_json(doc.handle)},
          {"sid", sid ? Json(sid->id) : Json(nullptr)},
          {"shared", sid && sid->shared},
          {"class", doc.class_name},
          {"type", doc.service_type},
          {"methods", methods_to_json(doc.methods)},
          {"xml", meta::encode_metadata(doc)}};
}

Json AdminApi::dynamic_links(const Handle& service) const {
  Json out = Json::array();
  for (const auto& l : engine_.dynamic_links(service)) {
    out.push_back(dynamic_link_to_json(l, engine_.links().threshold()));
  }
  return out;
}

void AdminApi::edit_link(const Handle& a, const Handle& b, bool create, bool mutual) {
  auto& net = node_.network();
  if (mutual) {
    // Validate both directions before changing either.
    net.resolve_handle(a);
    net.resolve_handle(b);
  }
  net.link_permanent(a, b, create);
  if (mutual) net.link_permanent(b, a, create);
}

Json AdminApi::demo_status() const {
  if (!demo_) return {{"created", false}, {"running", false}, {"round", 0}, {"converged", false},
                      {"services", Json::array()}, {"ids", Json::object()}, {"links", Json::object()}};
  const auto s = demo_->status();
  return {{"created", s.created}, {"running", s.running}, {"round", s.round}, {"converged", s.converged},
          {"services", s.services}, {"ids", s.ids}, {"links", s.links}};
}

Json AdminApi::control_demo(const Json& action) {
  const auto what = action.value("action", std::string("status"));
  if (what == "create") {
    if (!demo_) demo_ = std::make_unique<autonomic::SelfOrgDemo>(engine_);
    demo_->create(action.value("n", std::size_t{10}), action.value("id_len", std::size_t{8}),
                  action.value("seed", std::uint64_t{1}));
  } else if (what == "start" || what == "step" || what == "stop") {
    if (!demo_) fail(ErrorKind::DemoNotCreated, "create the demo services first");
    if (what == "start") {
      demo_->start(std::chrono::milliseconds(action.value("period_ms", 200)));
    } else if (what == "step") {
      demo_->step();
    } else {
      demo_->stop();
    }
  } else if (what != "status") {
    fail(ErrorKind::BadArgument, "unknown demo action '" + what + "'");
  }
  return demo_status();
}

namespace {

Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    auto j = Json::parse(body);
    if (!j.is_object()) fail(ErrorKind::BadArgument, "request body must be a JSON object");
    return j;
  } catch (const Json::exception& e) {
    fail(ErrorKind::BadArgument, std::string("request body: ") + e.what());
  }
}

// "/admin/meta/a/b" with prefix "/admin/meta" -> "a/b"; nullopt when the
// path is not under the prefix.
std::optional<std::string> sub_path(const std::string& path, std::string_view prefix) {
  if (!path.starts_with(prefix)) return std::nullopt;
  const auto rest = std::string_view(path).substr(prefix.size());
  if (rest.empty()) return std::string();
  if (rest.front() != '/') return std::nullopt;
  auto p = std::string(rest.substr(1));
  while (!p.empty() && p.back() == '/') p.pop_back();
  return p;
}

int parse_depth(const std::map<std::string, std::string>& query) {
  const auto it = query.find("depth");
  if (it == query.end()) return 3;
  int d = 0;
  const auto& s = it->second;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec != std::errc{} || p != s.data() + s.size() || d < 1) {
    fail(ErrorKind::BadArgument, "depth must be a positive integer");
  }
  return d;
}

}  // namespace

Json AdminApi::route(const HttpRequest& req) {
  const auto& path = req.path;
  if (req.method == "GET") {
    if (path == "/admin/info") return info();
    if (path == "/admin/view") return network_view(parse_depth(req.query));
    if (auto p = sub_path(path, "/admin/meta")) return metadata(local(*p));
    if (auto p = sub_path(path, "/admin/dynlinks")) return dynamic_links(local(*p));
    fail(ErrorKind::UnknownService, "no admin resource at " + path);
  }
  if (req.method != "POST") fail(ErrorKind::BadArgument, "unsupported method " + req.method);
  const auto body = parse_body(req.body);
  try {
    if (path == "/admin/link") {
      edit_link(handle_from_json(body.at("a"), node_.base_uri()), handle_from_json(body.at("b"), node_.base_uri()),
                body.value("create", true), body.value("mutual", false));
      return {{"ok", true}};
    }
    if (path == "/admin/service") {
      const auto parent = handle_from_json(body.value("parent", Json("")), node_.base_uri());
      std::vector<Value> args;
      for (const auto& a : body.value("args", Json::array())) args.push_back(value_from_json(a));
      std::optional<ServiceId> sid;
      if (body.contains("sid")) sid = ServiceId{body["sid"].get<std::string>(), body.value("shared", false)};
      const auto h = node_.register_kind(parent, body.at("name").get<std::string>(),
                                         body.at("class").get<std::string>(), std::move(args), sid);
      return {{"handle", handle_to_json(h)}};
    }
    if (path == "/admin/call") {
      std::vector<wire::ParamValue> params;
      for (const auto& a : body.value("params", Json::array())) params.push_back(wire::encode_param_auto(value_from_json(a)));
      std::optional<std::string> credential;
      if (body.contains("credential")) credential = body["credential"].get<std::string>();
      const auto result = node_.call(handle_from_json(body.at("target"), node_.base_uri()),
                                     body.at("method").get<std::string>(), params, credential);
      return {{"result", value_to_json(result.value)}};
    }
    if (path == "/admin/demo") return control_demo(body);
    if (path == "/admin/experiment") {
      return experiment_report_to_json(autonomic::run_experiment(experiment_params_from_json(body)));
    }
    if (path == "/admin/txn-sim") return run_txn_scenario(body);
  } catch (const Json::exception& e) {
    fail(ErrorKind::BadArgument, std::string("request body: ") + e.what());
  }
  fail(ErrorKind::UnknownService, "no admin resource at " + path);
}

HttpResponse AdminApi::handle(const HttpRequest& request) {
  HttpResponse res;
  res.content_type = "application/json";
  res.headers["Access-Control-Allow-Origin"] = "*";
  auto error = [&](int status, std::string_view kind, const std::string& message) {
    res.status = status;
    res.body = Json{{"error", kind}, {"message", message}}.dump();
    return res;
  };
  if (!token_.empty()) {
    const auto given = find_header(request.headers, "X-Admin-Token");
    if (!given || !codec::constant_time_equal(*given, token_)) return error(401, "Unauthorized", "missing or wrong admin token");
  }
  try {
    res.body = route(request).dump();
    return res;
  } catch (const Error& e) {
    return error(status_for(e.kind()), to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return error(500, "Internal", e.what());
  }
}

}  // namespace servnet::admin
