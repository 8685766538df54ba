#include "servnet/autonomic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "servnet/error.hpp"
#include "servnet/kinds.hpp"
#include "servnet/metadata.hpp"

namespace servnet {

std::string chain_to_string(const ConceptChain& chain) {
  std::string out;
  for (const auto& c : chain) {
    if (!out.empty()) out += " > ";
    out += c;
  }
  return out;
}

}  // namespace servnet

namespace servnet::autonomic {

DynamicLink reinforce_link(DynamicLink link, double delta, std::int64_t now) {
  if (!(delta > 0.0) || !std::isfinite(delta)) fail(ErrorKind::BadArgument, "reinforcement delta must be positive");
  link.weight += delta;
  link.hits += 1;
  link.last_used = std::max(link.last_used, now);
  return link;
}

// ---------------------------------------------------------------------------
// LinkTable

LinkTable::LinkTable(int threshold, DecayPolicy decay) : threshold_(threshold), decay_(decay) {
  if (threshold < 1) fail(ErrorKind::BadArgument, "reliability threshold must be at least 1");
  if (decay.enabled && !(decay.half_life_ticks > 0.0)) fail(ErrorKind::BadArgument, "half-life must be positive");
}

DynamicLink LinkTable::reinforce(const Handle& source, const Handle& target, const ConceptChain& chain, double delta,
                                 std::int64_t now) {
  if (chain.empty()) fail(ErrorKind::EmptyChain, "dynamic links need a non-empty concept chain");
  std::lock_guard lock(mutex_);
  auto [it, inserted] = links_.try_emplace(Key{source, target, chain});
  if (inserted) it->second = DynamicLink{source, target, chain, 0.0, 0, now};
  try {
    it->second = reinforce_link(it->second, delta, now);
  } catch (...) {
    if (inserted) links_.erase(it);
    throw;
  }
  return it->second;
}

bool LinkTable::ensure(const Handle& source, const Handle& target, const ConceptChain& chain, std::int64_t now) {
  if (chain.empty()) fail(ErrorKind::EmptyChain, "dynamic links need a non-empty concept chain");
  std::lock_guard lock(mutex_);
  return links_.try_emplace(Key{source, target, chain}, DynamicLink{source, target, chain, 0.0, 0, now}).second;
}

bool LinkTable::remove(const Handle& source, const Handle& target, const ConceptChain& chain) {
  std::lock_guard lock(mutex_);
  return links_.erase(Key{source, target, chain}) > 0;
}

std::vector<DynamicLink> LinkTable::links_from(const Handle& source) const {
  std::lock_guard lock(mutex_);
  std::vector<DynamicLink> out;
  for (auto it = links_.lower_bound(Key{source, Handle{}, {}}); it != links_.end() && std::get<0>(it->first) == source;
       ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<DynamicLink> LinkTable::reliable_for(const Handle& source, const ConceptChain& chain) const {
  auto out = links_from(source);
  std::erase_if(out, [&](const DynamicLink& l) { return l.chain != chain || !l.reliable(threshold_); });
  std::stable_sort(out.begin(), out.end(), [](const DynamicLink& a, const DynamicLink& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.target < b.target;
  });
  return out;
}

std::vector<DynamicLink> LinkTable::all() const {
  std::lock_guard lock(mutex_);
  std::vector<DynamicLink> out;
  out.reserve(links_.size());
  for (const auto& [k, l] : links_) out.push_back(l);
  return out;
}

std::size_t LinkTable::size() const {
  std::lock_guard lock(mutex_);
  return links_.size();
}

void LinkTable::decay_to(std::int64_t now) {
  if (!decay_.enabled) return;
  std::lock_guard lock(mutex_);
  for (auto& [k, l] : links_) {
    if (now <= l.last_used) continue;
    l.weight *= std::exp2(-static_cast<double>(now - l.last_used) / decay_.half_life_ticks);
    l.last_used = now;
  }
}

// ---------------------------------------------------------------------------
// Evaluation functions and behaviors

double hamming_similarity(const std::string& a, const std::string& b) noexcept {
  const auto longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < longest; ++i) {
    if (i >= a.size() || i >= b.size() || a[i] != b[i]) ++mismatches;
  }
  return 1.0 - static_cast<double>(mismatches) / static_cast<double>(longest);
}

double HammingSimilarity::score(const Value& self_state, const Value& peer_reply) const {
  if (self_state.type() != Value::Type::String || peer_reply.type() != Value::Type::String) return 0.0;
  return hamming_similarity(self_state.as_string(), peer_reply.as_string());
}

double QualityScore::score(const Value&, const Value& peer_reply) const {
  if (peer_reply.type() != Value::Type::Map) return 0.0;
  const auto& m = peer_reply.as_map();
  const auto found = m.find("found");
  const auto quality = m.find("quality");
  if (found == m.end() || quality == m.end() || found->second != Value{true}) return 0.0;
  const auto q = quality->second.as_number();
  return std::isfinite(q) ? std::clamp(q, 0.0, 1.0) : 0.0;
}

std::vector<Handle> ThresholdLink::decide(const std::vector<ScoredPeer>& scored) const {
  std::vector<Handle> out;
  for (const auto& p : scored) {
    if (p.score >= threshold_) out.push_back(p.peer);
  }
  return out;
}

std::vector<Handle> BestPeer::decide(const std::vector<ScoredPeer>& scored) const {
  if (scored.empty()) return {};
  double best = scored.front().score;
  for (const auto& p : scored) best = std::max(best, p.score);
  if (tolerance_ >= 1.0) {
    const ScoredPeer* pick = nullptr;
    for (const auto& p : scored) {
      if (p.score != best) continue;
      if (!pick || std::tie(p.tie_key, p.peer) < std::tie(pick->tie_key, pick->peer)) pick = &p;
    }
    return {pick->peer};
  }
  std::vector<Handle> out;
  for (const auto& p : scored) {
    if (p.score >= best * tolerance_) out.push_back(p.peer);
  }
  return out;
}

std::vector<std::string> behavior_names() { return {"BestPeer", "ThresholdLink"}; }
std::vector<std::string> evaluation_names() { return {"HammingSimilarity", "QualityScore"}; }

std::unique_ptr<Behavior> make_behavior(const std::string& name, double parameter) {
  if (name == "BestPeer") return std::make_unique<BestPeer>(parameter);
  if (name == "ThresholdLink") return std::make_unique<ThresholdLink>(parameter);
  fail(ErrorKind::BadArgument, "unknown behavior '" + name + "'");
}

std::unique_ptr<EvaluationFunction> make_evaluation(const std::string& name) {
  if (name == "HammingSimilarity") return std::make_unique<HammingSimilarity>();
  if (name == "QualityScore") return std::make_unique<QualityScore>();
  fail(ErrorKind::BadArgument, "unknown evaluation function '" + name + "'");
}

// ---------------------------------------------------------------------------
// Engine

struct Engine::Runner {
  std::thread thread;
  std::mutex mutex;
  std::condition_variable cv;
  bool stopping = false;
};

Engine::Engine(Node& node, int threshold, DecayPolicy decay) : node_(node), links_(threshold, decay) {
  for (const auto& n : behavior_names()) node_.add_autonomic_manager_kind(n);
  for (const auto& n : evaluation_names()) node_.add_autonomic_manager_kind(n);
}

Engine::~Engine() { stop_all(); }

void Engine::install(const Handle& s, AutoConfig config) {
  node_.network().resolve_handle(s);
  make_behavior(config.behavior, config.parameter);
  make_evaluation(config.evaluation);
  if (config.chain.empty()) fail(ErrorKind::EmptyChain, "autonomic configuration needs a concept chain");
  std::lock_guard lock(mutex_);
  configs_[s] = std::move(config);
}

void Engine::install_from_admin(const Handle& s) {
  const auto node = node_.network().resolve_handle(s);
  const auto managers = node_.network().read([&](const ServiceNode&) { return node->autonomic_managers; });
  AutoConfig cfg;
  bool have_behavior = false;
  for (const auto& m : managers) {
    if (m == "BestPeer" || m == "ThresholdLink") {
      cfg.behavior = m;
      cfg.parameter = m == "BestPeer" ? 1.0 : 0.5;
      have_behavior = true;
    } else if (m == "HammingSimilarity" || m == "QualityScore") {
      cfg.evaluation = m;
    }
  }
  if (!have_behavior) fail(ErrorKind::NoBehaviorInstalled, "'" + s.path_string() + "' names no behavior");
  for (const auto& name : node_.network().children(s.parent())) {
    if (name != s.path.back()) cfg.peers.push_back(s.parent().child(name));
  }
  install(s, std::move(cfg));
}

void Engine::uninstall(const Handle& s) {
  stop(s);
  std::lock_guard lock(mutex_);
  configs_.erase(s);
}

void Engine::set_peers(const Handle& s, std::vector<Handle> peers) {
  std::lock_guard lock(mutex_);
  const auto it = configs_.find(s);
  if (it == configs_.end()) fail(ErrorKind::NoBehaviorInstalled, "no behavior installed on '" + s.path_string() + "'");
  it->second.peers = std::move(peers);
}

bool Engine::installed(const Handle& s) const {
  std::lock_guard lock(mutex_);
  return configs_.contains(s);
}

Handle Engine::link_source_for(const Handle& s) const {
  const auto node = node_.network().resolve_handle(s);
  const meta::MutationRequest req{meta::Target::This, meta::Visibility::Public, meta::Volatility::Dynamic, node->sid};
  return meta::check_mutation_allowed(req) ? s : s.parent();
}

CycleReport Engine::run_auto_cycle(const Handle& s) {
  AutoConfig cfg;
  {
    std::lock_guard lock(mutex_);
    const auto it = configs_.find(s);
    if (it == configs_.end()) {
      fail(ErrorKind::NoBehaviorInstalled, "no behavior installed on '" + s.path_string() + "'");
    }
    cfg = it->second;
  }
  const auto behavior = make_behavior(cfg.behavior, cfg.parameter);
  const auto evaluation = make_evaluation(cfg.evaluation);
  const auto now = ++tick_;
  links_.decay_to(now);

  CycleReport report;
  report.service = s;
  report.link_source = link_source_for(s);

  std::vector<wire::ParamValue> probe;
  for (const auto& a : cfg.probe_args) probe.push_back(wire::encode_param_auto(a));
  Value self_state;
  if (evaluation->needs_self_state()) self_state = node_.call(s, cfg.probe_method, probe).value;

  std::vector<ScoredPeer> scored;
  std::set<Handle> failed;
  for (const auto& peer : cfg.peers) {
    if (peer == s) continue;
    try {
      auto reply = node_.call(peer, cfg.probe_method, probe).value;
      ++report.peers_queried;
      ScoredPeer sp{peer, reply, evaluation->score(self_state, reply), {}};
      sp.tie_key = reply.type() == Value::Type::String ? reply.as_string() : peer.path_string();
      scored.push_back(std::move(sp));
    } catch (const Error& err) {
      failed.insert(peer);
      report.failures.emplace_back(peer, std::string(to_string(ErrorKind::PeerUnreachable)) + ": " + err.what());
    }
  }
  if (scored.empty()) return report;

  const auto wanted = behavior->decide(scored);
  const std::set<Handle> wanted_set(wanted.begin(), wanted.end());
  std::map<Handle, double> score_of;
  for (const auto& p : scored) score_of[p.peer] = p.score;

  for (const auto& link : links_.links_from(report.link_source)) {
    if (link.chain != cfg.chain || wanted_set.contains(link.target) || failed.contains(link.target)) continue;
    if (report.link_source != s && !score_of.contains(link.target)) continue;  // parent's links from other children
    if (links_.remove(link.source, link.target, link.chain)) report.removed.push_back(link.target);
  }
  for (const auto& target : wanted) {
    if (links_.ensure(report.link_source, target, cfg.chain, now)) report.created.push_back(target);
    const auto sc = score_of[target];
    if (sc > 0.0) links_.reinforce(report.link_source, target, cfg.chain, sc, now);
  }
  return report;
}

std::vector<DynamicLink> Engine::dynamic_links(const Handle& s) const {
  if (!s.is_root()) node_.network().resolve_handle(s);
  return links_.links_from(s);
}

void Engine::start(const Handle& s, std::chrono::milliseconds period) {
  if (!installed(s)) fail(ErrorKind::NoBehaviorInstalled, "no behavior installed on '" + s.path_string() + "'");
  std::lock_guard lock(mutex_);
  if (runners_.contains(s)) return;
  auto runner = std::make_unique<Runner>();
  auto* r = runner.get();
  r->thread = std::thread([this, s, period, r] {
    std::unique_lock rl(r->mutex);
    while (!r->stopping) {
      rl.unlock();
      try {
        run_auto_cycle(s);
      } catch (const std::exception&) {
        // A failed cycle is retried next period.
      }
      rl.lock();
      r->cv.wait_for(rl, period, [r] { return r->stopping; });
    }
  });
  runners_[s] = std::move(runner);
}

void Engine::stop(const Handle& s) {
  std::unique_ptr<Runner> runner;
  {
    std::lock_guard lock(mutex_);
    const auto it = runners_.find(s);
    if (it == runners_.end()) return;
    runner = std::move(it->second);
    runners_.erase(it);
  }
  {
    std::lock_guard rl(runner->mutex);
    runner->stopping = true;
  }
  runner->cv.notify_all();
  runner->thread.join();
}

void Engine::stop_all() {
  std::vector<Handle> handles;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [h, r] : runners_) handles.push_back(h);
  }
  for (const auto& h : handles) stop(h);
}

// ---------------------------------------------------------------------------
// Search

namespace {

// Calls lookup(key) on one service; failures count as "not held".
std::optional<SearchAnswer> ask(Caller& caller, const Handle& h, const std::string& key) {
  try {
    const auto reply = caller.call(h, "lookup", {wire::encode_param_auto(Value{key})}).value;
    const auto& m = reply.as_map();
    if (m.at("found") != Value{true}) return std::nullopt;
    return SearchAnswer{true, m.at("value").as_string(), m.at("quality").as_number(), h};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void consider(SearchAnswer& best, const std::optional<SearchAnswer>& a) {
  if (a && (!best.found || a->quality > best.quality)) best = *a;
}

}  // namespace

SearchResult linked_search(Caller& caller, const LinkTable& links, const Handle& entry, const ConceptChain& chain,
                           const std::string& key, const std::vector<Handle>& order, std::size_t budget) {
  if (order.empty()) fail(ErrorKind::EmptyNetwork, "no services to search");
  SearchResult res;
  std::set<Handle> seen;
  for (const auto& link : links.reliable_for(entry, chain)) {
    if (res.visited >= budget) break;
    if (!seen.insert(link.target).second) continue;
    ++res.visited;
    const auto a = ask(caller, link.target, key);
    consider(res.answer, a);
    if (a) return res;
  }
  for (const auto& h : order) {
    if (res.visited >= budget) break;
    if (!seen.insert(h).second) continue;
    ++res.visited;
    consider(res.answer, ask(caller, h, key));
  }
  return res;
}

SearchResult exhaustive_search(Caller& caller, const std::string& key, const std::vector<Handle>& order) {
  if (order.empty()) fail(ErrorKind::EmptyNetwork, "no services to search");
  SearchResult res;
  for (const auto& h : order) {
    ++res.visited;
    consider(res.answer, ask(caller, h, key));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Experiment

namespace {

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::string key_name(std::size_t i) { return "k" + std::to_string(i); }

void store(Node& node, const Handle& h, const std::string& key, const std::string& value, double quality) {
  node.call(h, "store",
            {wire::encode_param_auto(Value{key}), wire::encode_param_auto(Value{value}),
             wire::encode_param_auto(Value{quality})});
}

}  // namespace

ExperimentReport run_experiment(const ExperimentParams& params) {
  if (params.n_services < 2) fail(ErrorKind::BadArgument, "the experiment needs at least 2 services");
  if (params.n_keys < 1) fail(ErrorKind::BadArgument, "the experiment needs at least 1 key");
  if (params.holders_per_key < 1 || params.holders_per_key > params.n_services) {
    fail(ErrorKind::BadArgument, "holders_per_key must be between 1 and n_services");
  }
  if (!(params.zipf_s >= 0.0) || !(params.update_rate >= 0.0 && params.update_rate <= 1.0)) {
    fail(ErrorKind::BadArgument, "zipf_s must be >= 0 and update_rate within [0,1]");
  }

  std::mt19937_64 rng(params.seed);
  NodeConfig cfg;
  cfg.base_uri = "servnet://experiment";
  Node node(cfg);

  std::vector<Handle> services;
  for (std::size_t i = 0; i < params.n_services; ++i) {
    const auto parent = i == 0 ? node.root() : services[draw(rng, 0, i - 1)];
    const auto name = "s" + std::to_string(i);
    services.push_back(node.register_kind(parent, name, builtin::kAuto, {Value{name}}));
  }
  const auto order = node.network().all_services();
  const auto& entry = services.front();

  std::uniform_real_distribution<double> quality(0.2, 1.0);
  std::vector<std::vector<std::size_t>> holders(params.n_keys);
  std::vector<std::size_t> pool(params.n_services);
  for (std::size_t k = 0; k < params.n_keys; ++k) {
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (std::size_t j = 0; j < params.holders_per_key; ++j) {
      std::swap(pool[j], pool[draw(rng, j, pool.size() - 1)]);
      holders[k].push_back(pool[j]);
      store(node, services[pool[j]], key_name(k), key_name(k) + "@s" + std::to_string(pool[j]), quality(rng));
    }
  }

  std::vector<double> weights(params.n_keys);
  for (std::size_t r = 0; r < params.n_keys; ++r) weights[r] = 1.0 / std::pow(static_cast<double>(r + 1), params.zipf_s);
  std::discrete_distribution<std::size_t> zipf(weights.begin(), weights.end());

  LinkTable links(params.threshold);
  for (std::size_t q = 0; q < params.n_queries; ++q) {
    const auto key = key_name(zipf(rng));
    const auto best = exhaustive_search(node, key, order);
    if (best.answer.found && best.answer.quality > 0.0) {
      links.reinforce(entry, *best.answer.holder, {"item", key}, best.answer.quality, static_cast<std::int64_t>(q + 1));
    }
  }

  // Held-out batch: same distribution, independent stream.
  std::seed_seq held_out_seed{params.seed, std::uint64_t{0x5e4c0ffeeULL}};
  std::mt19937_64 test_rng(held_out_seed);
  ExperimentReport report;
  report.params = params;
  double q_linked = 0.0;
  double q_exhaustive = 0.0;
  std::bernoulli_distribution churn(params.update_rate);
  for (std::size_t t = 0; t < params.test_queries; ++t) {
    if (churn(test_rng)) {
      const auto k = draw(test_rng, 0, params.n_keys - 1);
      const auto h = holders[k][draw(test_rng, 0, holders[k].size() - 1)];
      store(node, services[h], key_name(k), key_name(k) + "@s" + std::to_string(h), quality(test_rng));
    }
    const auto key = key_name(zipf(test_rng));
    const auto ex = exhaustive_search(node, key, order);
    const auto ln = linked_search(node, links, entry, {"item", key}, key, order, order.size());
    report.nodes_visited_exhaustive += ex.visited;
    report.nodes_visited_linked += ln.visited;
    q_exhaustive += ex.answer.quality;
    q_linked += ln.answer.quality;
  }
  if (params.test_queries > 0) {
    report.quality_exhaustive = q_exhaustive / static_cast<double>(params.test_queries);
    report.quality_linked = q_linked / static_cast<double>(params.test_queries);
  }
  if (report.nodes_visited_exhaustive > 0) {
    report.reduction = 1.0 - static_cast<double>(report.nodes_visited_linked) /
                                 static_cast<double>(report.nodes_visited_exhaustive);
  }
  if (q_exhaustive > 0.0) report.quality_loss = 1.0 - q_linked / q_exhaustive;
  report.links_formed = links.size();
  for (const auto& l : links.all()) report.reliable_links += l.reliable(params.threshold) ? 1 : 0;
  return report;
}

std::string format_report(const ExperimentReport& r) {
  std::ostringstream out;
  auto row = [&out](std::string_view label) -> std::ostream& {
    return out << std::left << std::setw(22) << label;
  };
  out << std::fixed << std::setprecision(4);
  row("services") << r.params.n_services << "\n";
  row("warmup queries") << r.params.n_queries << "\n";
  row("test queries") << r.params.test_queries << "\n";
  row("seed") << r.params.seed << "\n";
  row("visited (linked)") << r.nodes_visited_linked << "\n";
  row("visited (exhaustive)") << r.nodes_visited_exhaustive << "\n";
  row("quality (linked)") << r.quality_linked << "\n";
  row("quality (exhaustive)") << r.quality_exhaustive << "\n";
  row("links / reliable") << r.links_formed << " / " << r.reliable_links << "\n";
  out << std::setprecision(1);
  row("search reduction") << r.reduction * 100.0 << "%   (reference: 80-90%)\n";
  row("quality loss") << r.quality_loss * 100.0 << "%   (reference: 5-10%)\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Self-organisation demo

std::vector<std::string> random_ids(std::size_t n, std::size_t id_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> ids(n);
  for (auto& id : ids) {
    id.resize(id_len);
    for (auto& c : id) c = static_cast<char>('a' + draw(rng, 0, 25));
  }
  return ids;
}

SelfOrgDemo::SelfOrgDemo(Engine& engine, std::string container) : engine_(engine), container_(std::move(container)) {}

SelfOrgDemo::~SelfOrgDemo() { stop(); }

void SelfOrgDemo::create(std::size_t n, std::size_t id_len, std::uint64_t seed) {
  if (n < 2) fail(ErrorKind::BadArgument, "the demo needs at least 2 services");
  if (id_len < 1) fail(ErrorKind::BadArgument, "IDs need at least one character");
  stop();
  std::lock_guard step(step_mutex_);
  auto& node = engine_.node();
  const auto root = node.root();
  const auto container = root.child(container_);
  for (const auto& h : services_) engine_.uninstall(h);
  if (node.network().contains(container)) node.unregister(container);
  node.register_kind(root, container_, builtin::kBasic);

  const auto ids = random_ids(n, id_len, seed);
  const auto width = std::to_string(n - 1).size();
  std::vector<Handle> services;
  std::map<std::string, std::string> names;
  for (std::size_t i = 0; i < n; ++i) {
    auto name = std::to_string(i);
    name = "d" + std::string(width - name.size(), '0') + name;
    services.push_back(node.register_kind(container, name, builtin::kAuto, {Value{ids[i]}}));
    names[name] = ids[i];
  }
  for (const auto& h : services) {
    AutoConfig cfg;
    for (const auto& p : services) {
      if (p != h) cfg.peers.push_back(p);
    }
    engine_.install(h, std::move(cfg));
  }

  std::lock_guard lock(mutex_);
  services_ = std::move(services);
  ids_ = std::move(names);
  round_ = 0;
  converged_ = false;
  created_ = true;
}

bool SelfOrgDemo::step() {
  std::lock_guard step(step_mutex_);
  std::vector<Handle> services;
  {
    std::lock_guard lock(mutex_);
    if (!created_) fail(ErrorKind::DemoNotCreated, "create the demo services first");
    services = services_;
  }
  bool changed = false;
  for (const auto& h : services) changed |= engine_.run_auto_cycle(h).changed();
  std::lock_guard lock(mutex_);
  ++round_;
  converged_ = !changed;
  return changed;
}

SelfOrgDemo::Status SelfOrgDemo::run_to_convergence(std::size_t max_rounds) {
  for (std::size_t r = 0; r < max_rounds; ++r) {
    if (!step()) break;
  }
  return status();
}

void SelfOrgDemo::start(std::chrono::milliseconds period) {
  std::lock_guard lock(mutex_);
  if (!created_) fail(ErrorKind::DemoNotCreated, "create the demo services first");
  if (runner_.joinable()) return;
  stopping_ = false;
  runner_ = std::thread([this, period] {
    std::unique_lock lock(mutex_);
    while (!stopping_) {
      lock.unlock();
      try {
        step();
      } catch (const std::exception&) {
        // Retried next period.
      }
      lock.lock();
      cv_.wait_for(lock, period, [this] { return stopping_; });
    }
  });
}

void SelfOrgDemo::stop() {
  std::unique_lock lock(mutex_);
  stop_locked(lock);
}

void SelfOrgDemo::stop_locked(std::unique_lock<std::mutex>& lock) {
  stopping_ = true;
  auto runner = std::move(runner_);
  lock.unlock();
  cv_.notify_all();
  if (runner.joinable()) runner.join();
  lock.lock();
}

SelfOrgDemo::Status SelfOrgDemo::status() const {
  Status st;
  std::vector<Handle> services;
  {
    std::lock_guard lock(mutex_);
    st.created = created_;
    st.running = runner_.joinable();
    st.round = round_;
    st.converged = converged_;
    st.ids = ids_;
    services = services_;
  }
  for (const auto& h : services) {
    const auto& name = h.path.back();
    st.services.push_back(name);
    auto& targets = st.links[name];
    for (const auto& l : engine_.links().links_from(h)) {
      if (l.chain == ConceptChain{"id"}) targets.push_back(l.target.path.back());
    }
  }
  return st;
}

SelfOrgResult run_selforg_demo(std::size_t n, std::size_t id_len, std::size_t rounds, std::uint64_t seed) {
  NodeConfig cfg;
  cfg.base_uri = "servnet://selforg";
  Node node(cfg);
  Engine engine(node);
  SelfOrgDemo demo(engine, "Demo");
  demo.create(n, id_len, seed);
  const auto st = demo.run_to_convergence(rounds);
  SelfOrgResult out;
  for (const auto& name : st.services) out.ids.push_back(st.ids.at(name));
  out.links = st.links;
  out.name_to_id = st.ids;
  out.rounds = st.round;
  out.converged = st.converged;
  return out;
}

}  // namespace servnet::autonomic
