#include <doctest.h>

#include <httplib.h>

#include <chrono>
#include <thread>

#include "servnet/admin.hpp"
#include "servnet/codec_util.hpp"
#include "servnet/error.hpp"
#include "servnet/http_server.hpp"
#include "support/generators.hpp"

using namespace servnet;
using namespace servnet::admin;
using servnet::testgen::Rng;
using servnet::testgen::coin;
using servnet::testgen::uniform;

namespace {

NodeConfig config_for(std::string base) {
  NodeConfig cfg;
  cfg.base_uri = std::move(base);
  return cfg;
}

HttpRequest get(std::string path, std::map<std::string, std::string> query = {}) {
  HttpRequest r;
  r.method = "GET";
  r.path = std::move(path);
  r.query = std::move(query);
  return r;
}

HttpRequest post(std::string path, const Json& body) {
  HttpRequest r;
  r.method = "POST";
  r.path = std::move(path);
  r.body = body.dump();
  return r;
}

Json body_of(const HttpResponse& r) { return Json::parse(r.body); }

// Random nesting of Basic services; returns the height.
std::size_t random_tree(Node& node, Rng& rng, std::size_t n) {
  std::vector<std::pair<Handle, std::size_t>> all = {{node.root(), 0}};
  std::size_t height = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [parent, d] = all[uniform(rng, 0, all.size() - 1)];
    const auto h = node.register_kind(parent, "s" + std::to_string(i), "Basic");
    all.emplace_back(h, d + 1);
    height = std::max(height, d + 1);
  }
  for (int k = 0; k < 5 && all.size() > 2; ++k) {
    const auto& a = all[uniform(rng, 1, all.size() - 1)].first;
    const auto& b = all[uniform(rng, 1, all.size() - 1)].first;
    if (a != b) node.network().link_permanent(a, b, true);
  }
  return height;
}

bool any_truncated(const Json& v) {
  if (v.at("truncated").get<bool>()) return true;
  for (const auto& c : v.at("children")) {
    if (any_truncated(c)) return true;
  }
  return false;
}

std::size_t count_nodes(const Json& v) {
  std::size_t n = 1;
  for (const auto& c : v.at("children")) n += count_nodes(c);
  return n;
}

struct Fixture {
  Node node{config_for("http://admin-test:1")};
  autonomic::Engine engine{node};
  AdminApi api{node, engine};
};

}  // namespace

TEST_CASE("depth 1 lists only the root's children") {
  Fixture f;
  const auto a = f.node.register_kind(f.node.root(), "A", "Basic");
  f.node.register_kind(a, "A1", "Basic");
  f.node.register_kind(f.node.root(), "B", "Echo");
  const auto v = body_of(f.api.handle(get("/admin/view", {{"depth", "1"}})));
  CHECK(v["depth"] == 0);
  CHECK(v["child_count"] == 2);
  REQUIRE(v["children"].size() == 2);
  CHECK(v["children"][0]["name"] == "A");
  CHECK(v["children"][0]["truncated"] == true);
  CHECK(v["children"][0]["children"].empty());
  CHECK(v["children"][0]["child_count"] == 1);
  CHECK(v["children"][1]["class"] == builtin::kEcho);
  CHECK(v["children"][1]["truncated"] == false);

  const auto full = body_of(f.api.handle(get("/admin/view", {{"depth", "2"}})));
  CHECK_FALSE(any_truncated(full));
  CHECK(full["children"][0]["children"][0]["path"] == "A/A1");
  CHECK(f.api.handle(get("/admin/view", {{"depth", "0"}})).status == 400);
  CHECK(f.api.handle(get("/admin/view", {{"depth", "x"}})).status == 400);
}

TEST_CASE("property: a depth-d view is a prefix of the depth-(d+1) view") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    Rng rng(seed);
    Fixture f;
    const auto height = random_tree(f.node, rng, uniform(rng, 0, 40));
    std::vector<Json> views;
    for (int d = 1; d <= static_cast<int>(height) + 2; ++d) views.push_back(f.api.network_view(d));
    for (std::size_t i = 0; i + 1 < views.size(); ++i) {
      CHECK(is_view_prefix(views[i], views[i + 1]));
      CHECK(is_view_prefix(views[i], views[i]));
    }
    CHECK_FALSE(any_truncated(views.back()));
    CHECK(count_nodes(views.back()) == f.node.network().all_services().size() + 1);
    if (height >= 2) {
      CHECK_FALSE(is_view_prefix(views.back(), views.front()));
    }
  }
}

TEST_CASE("is_view_prefix rejects altered content") {
  Fixture f;
  Rng rng(5);
  random_tree(f.node, rng, 12);
  const auto full = f.api.network_view(10);
  auto changed = full;
  changed["children"][0]["sid"] = "someone-else";
  CHECK_FALSE(is_view_prefix(changed, full));
  auto dropped = full;
  dropped["children"].erase(dropped["children"].begin());
  CHECK_FALSE(is_view_prefix(dropped, full));
}

TEST_CASE("the view can be rebuilt from the metadata endpoint alone") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    Rng rng(seed);
    Fixture f;
    random_tree(f.node, rng, uniform(rng, 1, 30));
    const auto meta = body_of(f.api.handle(get("/admin/meta/")));
    const auto doc = meta::decode_metadata(meta["xml"].get<std::string>());
    for (int d = 1; d <= 6; ++d) {
      const auto served = body_of(f.api.handle(get("/admin/view", {{"depth", std::to_string(d)}})));
      CHECK(view_from_metadata(doc, d) == served);
    }
  }
}

TEST_CASE("GET endpoints leave the node unchanged") {
  Fixture f;
  Rng rng(3);
  random_tree(f.node, rng, 15);
  f.api.control_demo({{"action", "create"}, {"n", 4}, {"id_len", 3}, {"seed", 2}});
  f.api.control_demo({{"action", "step"}});
  auto state = [&] {
    std::string s = std::to_string(f.node.network().version());
    s += f.api.metadata(f.node.root())["xml"].get<std::string>();
    for (const auto& l : f.engine.links().all()) s += to_wire(l.target) + std::to_string(l.hits);
    s += std::to_string(f.node.stats().calls_dispatched);
    return codec::sha256_hex(s);
  };
  const auto before = state();
  const auto services = f.node.network().all_services();
  for (int round = 0; round < 3; ++round) {
    CHECK(f.api.handle(get("/admin/info")).status == 200);
    CHECK(f.api.handle(get("/admin/view", {{"depth", "3"}})).status == 200);
    for (const auto& h : services) {
      CHECK(f.api.handle(get("/admin/meta/" + h.path_string())).status == 200);
      CHECK(f.api.handle(get("/admin/dynlinks/" + h.path_string())).status == 200);
    }
    CHECK(f.api.handle(post("/admin/demo", {{"action", "status"}})).status == 200);
  }
  CHECK(state() == before);
}

TEST_CASE("metadata endpoint") {
  Fixture f;
  const auto h = f.node.register_kind(f.node.root(), "E", "Echo");
  const auto r = f.api.handle(get("/admin/meta/E"));
  CHECK(r.status == 200);
  CHECK(r.content_type == "application/json");
  const auto j = body_of(r);
  CHECK(j["handle"]["path"] == "E");
  CHECK(j["class"] == builtin::kEcho);
  CHECK(meta::decode_metadata(j["xml"].get<std::string>()) == f.node.metadata(h));
  CHECK(j["methods"] == methods_to_json(f.node.describe_methods(h)));
  const auto missing = f.api.handle(get("/admin/meta/nope"));
  CHECK(missing.status == 404);
  CHECK(body_of(missing)["error"] == "UnknownService");
  CHECK(f.api.handle(get("/admin/elsewhere")).status == 404);
}

TEST_CASE("permanent link editing") {
  Fixture f;
  f.node.register_kind(f.node.root(), "A", "Basic");
  f.node.register_kind(f.node.root(), "B", "Basic");
  auto links_of = [&](int i) { return f.api.network_view(1)["children"][i]["links"]; };

  CHECK(f.api.handle(post("/admin/link", {{"a", "A"}, {"b", "B"}, {"mutual", true}})).status == 200);
  CHECK(links_of(0) == Json::array({{{"uri", "http://admin-test:1"}, {"path", "B"}}}));
  CHECK(links_of(1) == Json::array({{{"uri", "http://admin-test:1"}, {"path", "A"}}}));

  CHECK(f.api.handle(post("/admin/link", {{"a", "A"}, {"b", "B"}, {"create", false}})).status == 200);
  CHECK(links_of(0).empty());
  CHECK(links_of(1).size() == 1);

  // Destroying a link that never existed is a no-op.
  CHECK(f.api.handle(post("/admin/link", {{"a", "A"}, {"b", "B"}, {"create", false}})).status == 200);
  CHECK(links_of(0).empty());

  const auto cross = f.api.handle(post("/admin/link", {{"a", "A"}, {"b", {{"uri", "http://other:2"}, {"path", "X"}}}}));
  CHECK(cross.status == 409);
  CHECK(body_of(cross)["error"] == "CrossNetworkPermanentLink");
  CHECK(f.api.handle(post("/admin/link", {{"a", "A"}, {"b", "Nope"}, {"mutual", true}})).status == 404);
  CHECK(links_of(0).empty());
  CHECK(f.api.handle(post("/admin/link", {{"a", "A"}})).status == 400);
  CHECK(f.api.handle(post("/admin/link", Json::array())).status == 400);
  HttpRequest garbage = post("/admin/link", {});
  garbage.body = "{not json";
  CHECK(f.api.handle(garbage).status == 400);
}

TEST_CASE("dynamic links endpoint mirrors the engine's link table") {
  Fixture f;
  f.node.register_kind(f.node.root(), "Fresh", "Auto", {Value{"x"}});
  CHECK(body_of(f.api.handle(get("/admin/dynlinks/Fresh"))).empty());
  CHECK(f.api.handle(get("/admin/dynlinks/Missing")).status == 404);

  f.api.control_demo({{"action", "create"}, {"n", 6}, {"id_len", 4}, {"seed", 9}});
  f.api.control_demo({{"action", "step"}});
  std::size_t total = 0;
  const auto status = f.api.demo_status();
  for (const auto& name : status["services"]) {
    const Handle h{f.node.base_uri(), {"SelfOrgDemo", name.get<std::string>()}};
    const auto served = body_of(f.api.handle(get("/admin/dynlinks/SelfOrgDemo/" + name.get<std::string>())));
    Json dump = Json::array();
    for (const auto& l : f.engine.links().links_from(h)) dump.push_back(dynamic_link_to_json(l, f.engine.links().threshold()));
    CHECK(served == dump);
    total += served.size();
  }
  CHECK(total > 0);
}

TEST_CASE("demo control") {
  Fixture f;
  const auto early = f.api.handle(post("/admin/demo", {{"action", "start"}}));
  CHECK(early.status == 400);
  CHECK(body_of(early)["error"] == "DemoNotCreated");
  CHECK(body_of(f.api.handle(post("/admin/demo", {{"action", "status"}})))["created"] == false);
  CHECK(f.api.handle(post("/admin/demo", {{"action", "dance"}})).status == 400);

  auto s = body_of(f.api.handle(post("/admin/demo", {{"action", "create"}, {"n", 10}, {"id_len", 8}, {"seed", 1}})));
  CHECK(s["created"] == true);
  CHECK(s["services"].size() == 10);
  CHECK(s["round"] == 0);
  f.api.handle(post("/admin/demo", {{"action", "start"}, {"period_ms", 5}}));
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while (f.api.demo_status()["round"].get<int>() < 3 && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  CHECK(f.api.demo_status()["round"].get<int>() >= 3);
  CHECK(f.api.demo_status()["running"] == true);
  s = body_of(f.api.handle(post("/admin/demo", {{"action", "stop"}})));
  CHECK(s["running"] == false);
  const auto frozen = s["round"];
  std::this_thread::sleep_for(std::chrono::milliseconds(40));
  CHECK(f.api.demo_status()["round"] == frozen);
  CHECK(f.api.demo_status()["links"].size() == 10);
}

TEST_CASE("experiment endpoint") {
  Fixture f;
  const Json params = {{"n_services", 30}, {"n_queries", 100}, {"seed", 4}, {"n_keys", 20}, {"test_queries", 50}};
  const auto r = f.api.handle(post("/admin/experiment", params));
  REQUIRE(r.status == 200);
  const auto j = body_of(r);
  const auto direct = autonomic::run_experiment(experiment_params_from_json(params));
  CHECK(j == experiment_report_to_json(direct));
  CHECK(j["params"]["n_services"] == 30);
  CHECK(j["report"].get<std::string>().find("reference") != std::string::npos);
  CHECK(f.api.handle(post("/admin/experiment", {{"n_servces", 3}})).status == 400);
  CHECK(f.api.handle(post("/admin/experiment", {{"n_services", "many"}})).status == 400);
  CHECK(f.api.handle(post("/admin/experiment", {{"n_services", 1}})).status == 400);
}

TEST_CASE("service registration and calls through the admin API") {
  Fixture f;
  auto r = f.api.handle(post("/admin/service", {{"name", "E"}, {"class", "Echo"}}));
  REQUIRE(r.status == 200);
  CHECK(body_of(r)["handle"]["path"] == "E");
  CHECK(f.api.handle(post("/admin/service", {{"name", "E"}, {"class", "Echo"}})).status == 409);
  CHECK(body_of(f.api.handle(post("/admin/service", {{"name", "Q"}, {"class", "Quantum"}})))["error"] ==
        "UnknownServiceKind");
  r = f.api.handle(post("/admin/service", {{"parent", "E"}, {"name", "A"}, {"class", "Auto"}, {"args", {"abc"}}}));
  CHECK(r.status == 200);
  const Json list = {1, 2.5, "x", nullptr, true, {{"k", {1, 2}}}};
  r = f.api.handle(post("/admin/call", {{"target", "E"}, {"method", "echo"}, {"params", {list}}}));
  REQUIRE(r.status == 200);
  CHECK(body_of(r)["result"] == list);
  r = f.api.handle(post("/admin/call", {{"target", "E/A"}, {"method", "getId"}}));
  CHECK(body_of(r)["result"] == "abc");
  CHECK(f.api.handle(post("/admin/call", {{"target", "E"}, {"method", "nope"}})).status == 400);
}

TEST_CASE("property: value <-> JSON round trip") {
  Rng rng(2024);
  for (int i = 0; i < 2000; ++i) {
    const auto v = servnet::testgen::any_value(rng);
    const auto j = value_to_json(v);
    CHECK(value_from_json(Json::parse(j.dump())) == v);
  }
  const Value tricky = Value::Map{{"$blob", Value{"not a blob"}}};
  CHECK(value_from_json(value_to_json(tricky)) == tricky);
  const auto nan = value_from_json(value_to_json(Value{std::numeric_limits<double>::quiet_NaN()}));
  CHECK(std::isnan(nan.as_number()));
  CHECK_THROWS_AS(value_from_json(Json{{"$blob", 3}}), Error);
  CHECK_THROWS_AS(value_from_json(Json{{"$what", "x"}}), Error);
}

TEST_CASE("transaction scenarios") {
  Fixture f;
  const Json happy = {{"events",
                       {"BothAgree",
                        {{"event", "ClientDeposits"}, {"token", "T-1"}},
                        "ProviderExecutes",
                        {{"event", "DeliverResult"}, {"result", 42}},
                        "ClientAccepts",
                        "ReleasePayment",
                        "Close"}}};
  auto j = body_of(f.api.handle(post("/admin/txn-sim", happy)));
  CHECK(j["final"]["state"] == "Closed");
  CHECK(j["final"]["provider_token"] == "T-1");
  CHECK(j["final"]["release_count"] == 1);
  CHECK(j["rejected"] == false);
  CHECK(j["log"].size() == 7);
  for (std::size_t i = 0; i + 2 < j["log"].size(); ++i) CHECK(j["log"][i]["provider_sees_token"] == false);

  const Json illegal = {{"events", {"BothAgree", "ReleasePayment"}}};
  j = body_of(f.api.handle(post("/admin/txn-sim", illegal)));
  CHECK(j["rejected"] == true);
  CHECK(j["final"]["state"] == "Agreed");
  CHECK(f.api.handle(post("/admin/txn-sim", {{"events", {"Dance"}}})).status == 400);
  CHECK(f.api.handle(post("/admin/txn-sim", {{"nope", 1}})).status == 400);
}

TEST_CASE("admin token") {
  Node node(config_for("http://tok:1"));
  autonomic::Engine engine(node);
  AdminApi api(node, engine, "s3cret");
  CHECK(api.handle(get("/admin/info")).status == 401);
  auto req = get("/admin/info");
  req.headers["x-admin-token"] = "wrong";
  CHECK(api.handle(req).status == 401);
  req.headers["x-admin-token"] = "s3cret";
  CHECK(api.handle(req).status == 200);
}

TEST_CASE("admin API over HTTP") {
  HttpServer server("127.0.0.1", 0);
  Node node(config_for(server.base_uri()));
  autonomic::Engine engine(node);
  AdminApi api(node, engine);
  server.attach(node);
  server.set_admin_handler([&api](const HttpRequest& r) { return api.handle(r); });
  server.start();
  node.register_kind(node.root(), "Outer Space", "Basic");
  node.register_kind(Handle{node.base_uri(), {"Outer Space"}}, "In", "Echo");

  httplib::Client client("127.0.0.1", server.port());
  auto res = client.Get("/admin/view?depth=1");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body) == api.network_view(1));
  res = client.Get("/admin/meta/Outer%20Space/In");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(Json::parse(res->body)["handle"]["path"] == "Outer Space/In");
  res = client.Post("/admin/call", Json{{"target", "Outer Space/In"}, {"method", "echo"}, {"params", {"hi"}}}.dump(),
                    "application/json");
  REQUIRE(res);
  CHECK(Json::parse(res->body)["result"] == "hi");
  server.stop();
}
