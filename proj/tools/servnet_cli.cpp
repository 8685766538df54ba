// Command-line front end: `serve` hosts a node; the other subcommands are
// thin clients of a running node's admin API, except that `experiment`,
// `txn-sim` and `query` run in-process when no --url is given.

#include <CLI11.hpp>
#include <httplib.h>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "servnet/admin.hpp"
#include "servnet/concepts.hpp"
#include "servnet/config.hpp"
#include "servnet/error.hpp"
#include "servnet/http_server.hpp"

using namespace servnet;
using admin::Json;

namespace {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kInternalError = 2;

std::atomic<bool> g_interrupted{false};

struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool is_user_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::EncodeError:
    case ErrorKind::MissingPacket:
      return false;
    default:
      return true;
  }
}

struct Remote {
  std::string url = "http://127.0.0.1:8888";
  std::string token;

  Json request(const std::string& method, const std::string& path, const Json& body = {}) const {
    httplib::Client client(url);
    client.set_read_timeout(600, 0);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("X-Admin-Token", token);
    const auto res = method == "GET" ? client.Get(path, headers)
                                     : client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw std::runtime_error("cannot reach " + url + ": " + httplib::to_string(res.error()));
    Json j;
    try {
      j = Json::parse(res->body);
    } catch (const Json::exception&) {
      throw std::runtime_error("HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    if (res->status >= 400) {
      const auto msg = j.value("error", std::string("error")) + ": " + j.value("message", std::string());
      if (res->status < 500) throw UserError(msg);
      throw std::runtime_error(msg);
    }
    return j;
  }
};

std::string encode_path(const std::string& path) {
  std::string out;
  for (unsigned char c : path) {
    if (std::isalnum(c) || c == '/' || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

void print_view(const Json& v, int indent) {
  std::string line(indent * 2, ' ');
  line += v["name"].get<std::string>().empty() ? "(root)" : v["name"].get<std::string>();
  if (v["sid"].is_string() && !v["sid"].get<std::string>().empty()) line += "  [" + v["sid"].get<std::string>() + (v["shared"].get<bool>() ? ", shared" : "") + "]";
  if (!v["class"].get<std::string>().empty()) line += "  " + v["class"].get<std::string>();
  for (const auto& l : v["links"]) line += "  -> " + l["path"].get<std::string>();
  if (v["truncated"].get<bool>()) line += "  (+" + std::to_string(v["child_count"].get<int>()) + " hidden)";
  std::cout << line << '\n';
  for (const auto& c : v["children"]) print_view(c, indent + 1);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw UserError(path + ": " + e.what());
  }
}

int serve(const std::string& config_path, const std::string& listen, const std::string& base_uri,
          const std::string& token, bool sample) {
  NodeConfig cfg;
  if (!config_path.empty() || std::getenv("SERVNET_CONFIG")) cfg = load_config(config_path);
  if (!listen.empty()) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw UserError("--listen expects host:port");
    cfg.listen_host = listen.substr(0, colon);
    try {
      cfg.listen_port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
      throw UserError("--listen expects host:port");
    }
  }
  if (!base_uri.empty()) cfg.base_uri = base_uri;
  if (!token.empty()) cfg.admin_token = token;

  HttpServer server(cfg.listen_host, cfg.listen_port);
  if (cfg.base_uri.empty()) cfg.base_uri = server.base_uri();
  Node node(cfg);
  autonomic::Engine engine(node);
  admin::AdminApi api(node, engine, cfg.admin_token);
  server.attach(node);
  if (cfg.admin_enabled) server.set_admin_handler([&api](const HttpRequest& r) { return api.handle(r); });
  if (sample) {
    const auto hub = node.register_kind(node.root(), "Hub", builtin::kBasic);
    node.register_kind(hub, "Echo", builtin::kEcho);
    node.register_kind(hub, "Auto", builtin::kAuto, {Value{"hub-auto"}});
  }
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });
  server.start();
  std::cerr << "servnet node " << node.base_uri() << " listening on " << cfg.listen_host << ':' << server.port()
            << (cfg.admin_enabled ? " (admin API on)" : "") << '\n';
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  engine.stop_all();
  server.stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"servnet: nested service networks with packetized RPC and autonomic linking"};
  app.require_subcommand(1);
  Remote remote;
  auto add_remote = [&](CLI::App* sub, bool optional_url) {
    auto* opt = sub->add_option("--url", remote.url, "Admin API base URL of a running node");
    if (!optional_url) opt->capture_default_str();
    sub->add_option("--token", remote.token, "Shared admin token (X-Admin-Token)");
  };

  auto* serve_cmd = app.add_subcommand("serve", "Host a node with its HTTP endpoint and admin API");
  std::string config_path, listen, base_uri, token;
  bool sample = false;
  serve_cmd->add_option("--config", config_path, "Config file (SERVNET_CONFIG overrides)");
  serve_cmd->add_option("--listen", listen, "host:port to bind (port 0 picks a free one)");
  serve_cmd->add_option("--base-uri", base_uri, "Base URI announced in handles");
  serve_cmd->add_option("--admin-token", token, "Require this token on admin requests");
  serve_cmd->add_flag("--sample", sample, "Start with a small tree of built-in services");

  auto* view_cmd = app.add_subcommand("view", "Print the network tree");
  int depth = 3;
  bool as_json = false;
  view_cmd->add_option("--depth", depth, "Levels below the root")->check(CLI::PositiveNumber)->capture_default_str();
  view_cmd->add_flag("--json", as_json, "Print raw JSON");
  add_remote(view_cmd, false);

  auto* link_cmd = app.add_subcommand("link", "Create or destroy a permanent link");
  std::string link_a, link_b;
  bool destroy = false, mutual = false;
  link_cmd->add_option("a", link_a, "Source service path")->required();
  link_cmd->add_option("b", link_b, "Target service path")->required();
  link_cmd->add_flag("--destroy", destroy, "Remove the link instead of creating it");
  link_cmd->add_flag("--mutual", mutual, "Apply both directions");
  add_remote(link_cmd, false);

  auto* meta_cmd = app.add_subcommand("meta", "Show a service's metadata document");
  std::string meta_path;
  bool dynlinks = false;
  meta_cmd->add_option("path", meta_path, "Service path (empty for the root)");
  meta_cmd->add_flag("--dynlinks", dynlinks, "Show the service's dynamic links instead");
  add_remote(meta_cmd, false);

  auto* demo_cmd = app.add_subcommand("demo", "Drive the self-organisation demo");
  std::string action;
  std::size_t n = 10, id_len = 8;
  std::uint64_t seed = 1;
  int period_ms = 200;
  demo_cmd->add_option("action", action, "create | start | stop | step | status")
      ->required()
      ->check(CLI::IsMember({"create", "start", "stop", "step", "status"}));
  demo_cmd->add_option("--n", n, "Number of services")->capture_default_str();
  demo_cmd->add_option("--id-len", id_len, "ID length")->capture_default_str();
  demo_cmd->add_option("--seed", seed, "ID seed")->capture_default_str();
  demo_cmd->add_option("--period-ms", period_ms, "Round period for start")->capture_default_str();
  add_remote(demo_cmd, false);

  auto* exp_cmd = app.add_subcommand("experiment", "Run the linked-search experiment");
  autonomic::ExperimentParams params;
  exp_cmd->add_option("--n", params.n_services, "Services")->capture_default_str();
  exp_cmd->add_option("--q", params.n_queries, "Warmup queries")->capture_default_str();
  exp_cmd->add_option("--seed", params.seed, "Seed")->capture_default_str();
  exp_cmd->add_option("--keys", params.n_keys, "Distinct keys")->capture_default_str();
  exp_cmd->add_option("--holders", params.holders_per_key, "Holders per key")->capture_default_str();
  exp_cmd->add_option("--test-queries", params.test_queries, "Held-out queries")->capture_default_str();
  exp_cmd->add_option("--zipf", params.zipf_s, "Zipf exponent of key popularity")->capture_default_str();
  exp_cmd->add_option("--update-rate", params.update_rate, "Per-query chance of a quality update")
      ->capture_default_str();
  exp_cmd->add_option("--threshold", params.threshold, "Reliability threshold")->capture_default_str();
  add_remote(exp_cmd, true);

  auto* txn_cmd = app.add_subcommand("txn-sim", "Replay a mediated transaction scenario (JSON file)");
  std::string scenario_path;
  txn_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
  add_remote(txn_cmd, true);

  auto* query_cmd = app.add_subcommand("query", "Filtered query over a concept-store JSON lines file");
  std::string data_path, predicate;
  std::vector<std::string> targets;
  int threshold = kDefaultReliabilityThreshold;
  bool reliable_only = false;
  query_cmd->add_option("data", data_path, "JSON lines file")->required();
  query_cmd->add_option("--target", targets, "alias=concept[/concept...]")->required();
  query_cmd->add_option("--where", predicate, "Predicate, e.g. \"h.cost < 150 and t.street = h.street\"");
  query_cmd->add_option("--threshold", threshold, "Reliability threshold")->capture_default_str();
  query_cmd->add_flag("--reliable", reliable_only, "Only tuples whose records are pairwise reliable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUserError;
  }

  try {
    if (*serve_cmd) return serve(config_path, listen, base_uri, token, sample);
    if (*view_cmd) {
      const auto v = remote.request("GET", "/admin/view?depth=" + std::to_string(depth));
      if (as_json) {
        std::cout << v.dump(2) << '\n';
      } else {
        print_view(v, 0);
      }
    } else if (*link_cmd) {
      remote.request("POST", "/admin/link", {{"a", link_a}, {"b", link_b}, {"create", !destroy}, {"mutual", mutual}});
      std::cout << (destroy ? "removed " : "linked ") << link_a << (mutual ? " <-> " : " -> ") << link_b << '\n';
    } else if (*meta_cmd) {
      if (dynlinks) {
        std::cout << remote.request("GET", "/admin/dynlinks/" + encode_path(meta_path)).dump(2) << '\n';
      } else {
        std::cout << remote.request("GET", "/admin/meta/" + encode_path(meta_path))["xml"].get<std::string>() << '\n';
      }
    } else if (*demo_cmd) {
      const auto s = remote.request(
          "POST", "/admin/demo",
          {{"action", action}, {"n", n}, {"id_len", id_len}, {"seed", seed}, {"period_ms", period_ms}});
      std::cout << s.dump(2) << '\n';
    } else if (*exp_cmd) {
      if (exp_cmd->count("--url")) {
        const auto p = admin::experiment_report_to_json(autonomic::ExperimentReport{params})["params"];
        std::cout << remote.request("POST", "/admin/experiment", p)["report"].get<std::string>();
      } else {
        std::cout << autonomic::format_report(autonomic::run_experiment(params));
      }
    } else if (*txn_cmd) {
      const auto scenario = read_json_file(scenario_path);
      const auto result =
          txn_cmd->count("--url") ? remote.request("POST", "/admin/txn-sim", scenario) : admin::run_txn_scenario(scenario);
      std::cout << result.dump(2) << '\n';
      return result["rejected"].get<bool>() ? kUserError : kOk;
    } else if (*query_cmd) {
      std::ifstream in(data_path);
      if (!in) throw UserError("cannot read " + data_path);
      concepts::ConceptStore store(threshold);
      for (auto& e : concepts::load_jsonl(in)) store.add_entry(std::move(e));
      std::vector<concepts::Target> ts;
      for (const auto& t : targets) {
        const auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0) throw UserError("--target expects alias=concept[/concept...]");
        ts.push_back({t.substr(0, eq), split_path(t.substr(eq + 1))});
      }
      const auto rows = store.query_filtered(ts, concepts::parse_predicate(predicate), reliable_only);
      for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) std::cout << (i ? "\t" : "") << row[i].record_id;
        std::cout << '\n';
      }
      std::cerr << rows.size() << " result(s)\n";
    }
    return kOk;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return is_user_error(e.kind()) ? kUserError : kInternalError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}
