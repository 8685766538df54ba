#pragma once

#include <json.hpp>

#include <memory>
#include <mutex>
#include <string>

#include "servnet/autonomic.hpp"
#include "servnet/metadata.hpp"
#include "servnet/node.hpp"
#include "servnet/transport.hpp"
#include "servnet/trust.hpp"

namespace servnet::admin {

using Json = nlohmann::json;

/// Ints and floats map to JSON numbers, maps to objects, lists to arrays.
/// Values JSON cannot hold directly are tagged objects: {"$blob": base64},
/// {"$float": "inf" | "-inf" | "nan"}, and {"$map": {...}} for a map whose
/// only key starts with '$'.
Json value_to_json(const Value& v);
/// Throws BadArgument for malformed tagged objects.
Value value_from_json(const Json& j);

/// {"uri": base, "path": "a/b"}.
Json handle_to_json(const Handle& h);
/// Accepts a path string (local to base_uri) or {"uri", "path"}.
Handle handle_from_json(const Json& j, const std::string& base_uri);

/// Tree of {name, path, sid, shared, class, type, depth, links,
/// child_count, children, truncated} read only from the document. Children
/// are listed down to `depth` levels below the root; a node whose children
/// were cut has `truncated: true` and an empty `children` array.
Json view_from_metadata(const meta::MetadataDoc& root, int depth);
/// True when `shorter` equals `longer` with some subtrees cut off.
bool is_view_prefix(const Json& shorter, const Json& longer);

Json methods_to_json(const MethodTable& table);
Json dynamic_link_to_json(const autonomic::DynamicLink& link, int threshold);
Json experiment_report_to_json(const autonomic::ExperimentReport& report);
autonomic::ExperimentParams experiment_params_from_json(const Json& j);

/// Scenario: {"direct_delivery"?: bool, "events": [{"event": name,
/// "token"?: key, "result"?: value, "note"?: text}, ...]}.
Json run_txn_scenario(const Json& scenario);

/// HTTP status for an error kind: 404 unknown service, 409 cross-node
/// permanent link, 400 for other caller mistakes, 500 otherwise.
int status_for(ErrorKind kind) noexcept;

/// JSON admin surface over one node and its autonomic engine.
///
///   GET  /admin/info
///   GET  /admin/view?depth=N
///   GET  /admin/meta/{path}
///   GET  /admin/dynlinks/{path}
///   POST /admin/link        {"a", "b", "create"?, "mutual"?}
///   POST /admin/service     {"parent"?, "name", "class", "args"?}
///   POST /admin/call        {"target", "method", "params"?, "credential"?}
///   POST /admin/demo        {"action": create|start|stop|step|status, ...}
///   POST /admin/experiment  {experiment parameters}
///   POST /admin/txn-sim     {scenario}
///
/// Errors come back as {"error": kind, "message": text}. When a token is
/// set, every request must carry it in X-Admin-Token.
class AdminApi {
 public:
  AdminApi(Node& node, autonomic::Engine& engine, std::string token = "");
  ~AdminApi();

  HttpResponse handle(const HttpRequest& request);

  Json info() const;
  Json network_view(int depth) const;
  Json metadata(const Handle& service) const;
  Json dynamic_links(const Handle& service) const;
  void edit_link(const Handle& a, const Handle& b, bool create, bool mutual);
  Json control_demo(const Json& action);
  Json demo_status() const;

 private:
  Json route(const HttpRequest& request);
  Handle local(const std::string& path) const;

  Node& node_;
  autonomic::Engine& engine_;
  std::string token_;
  std::unique_ptr<autonomic::SelfOrgDemo> demo_;
};

}  // namespace servnet::admin
