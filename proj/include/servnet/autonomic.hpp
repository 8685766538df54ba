#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "servnet/concept_chain.hpp"
#include "servnet/handle.hpp"
#include "servnet/node.hpp"
#include "servnet/value.hpp"

namespace servnet::autonomic {

/// Weighted, chain-keyed edge built up by use. The target may live on
/// another node. last_used is a logical tick, not wall time, so runs are
/// reproducible.
struct DynamicLink {
  Handle source;
  Handle target;
  ConceptChain chain;
  double weight = 0.0;
  int hits = 0;
  std::int64_t last_used = 0;

  bool reliable(int threshold) const noexcept { return hits >= threshold; }
  bool operator==(const DynamicLink&) const = default;
};

/// weight += delta, hits += 1. Throws BadArgument unless delta > 0.
DynamicLink reinforce_link(DynamicLink link, double delta, std::int64_t now = 0);

/// Optional exponential weight decay, measured in ticks. Hits never decay.
struct DecayPolicy {
  bool enabled = false;
  double half_life_ticks = 100.0;
};

/// Thread-safe store of dynamic links keyed by (source, target, chain).
class LinkTable {
 public:
  explicit LinkTable(int threshold = kDefaultReliabilityThreshold, DecayPolicy decay = {});

  int threshold() const noexcept { return threshold_; }

  DynamicLink reinforce(const Handle& source, const Handle& target, const ConceptChain& chain, double delta,
                        std::int64_t now = 0);
  /// Creates a zero-weight link if absent; returns whether it was created.
  bool ensure(const Handle& source, const Handle& target, const ConceptChain& chain, std::int64_t now = 0);
  bool remove(const Handle& source, const Handle& target, const ConceptChain& chain);

  std::vector<DynamicLink> links_from(const Handle& source) const;
  /// Reliable links for one chain, heaviest first (ties by target).
  std::vector<DynamicLink> reliable_for(const Handle& source, const ConceptChain& chain) const;
  std::vector<DynamicLink> all() const;
  std::size_t size() const;

  /// Applies decay up to `now`. No-op unless decay is enabled.
  void decay_to(std::int64_t now);

 private:
  using Key = std::tuple<Handle, Handle, ConceptChain>;
  int threshold_;
  DecayPolicy decay_;
  mutable std::mutex mutex_;
  std::map<Key, DynamicLink> links_;
};

/// Scores a peer's reply against this service's own state; result in [0,1].
class EvaluationFunction {
 public:
  virtual ~EvaluationFunction() = default;
  virtual std::string name() const = 0;
  virtual bool needs_self_state() const { return false; }
  virtual double score(const Value& self_state, const Value& peer_reply) const = 0;
};

/// 1 - (mismatched positions / longer length) over two strings.
class HammingSimilarity : public EvaluationFunction {
 public:
  std::string name() const override { return "HammingSimilarity"; }
  bool needs_self_state() const override { return true; }
  double score(const Value& self_state, const Value& peer_reply) const override;
};

/// Reads a lookup reply {found, value, quality}; 0 when not found.
class QualityScore : public EvaluationFunction {
 public:
  std::string name() const override { return "QualityScore"; }
  double score(const Value& self_state, const Value& peer_reply) const override;
};

double hamming_similarity(const std::string& a, const std::string& b) noexcept;

struct ScoredPeer {
  Handle peer;
  Value reply;
  double score = 0.0;
  std::string tie_key;  // the reply when it is a string, else the handle path
};

/// Link decisions over one cycle's scored peers.
class Behavior {
 public:
  virtual ~Behavior() = default;
  virtual std::string name() const = 0;
  /// Targets this service should be linked to after the cycle.
  virtual std::vector<Handle> decide(const std::vector<ScoredPeer>& scored) const = 0;
};

/// Links every peer scoring at least `threshold`.
class ThresholdLink : public Behavior {
 public:
  explicit ThresholdLink(double threshold = 0.5) : threshold_(threshold) {}
  std::string name() const override { return "ThresholdLink"; }
  std::vector<Handle> decide(const std::vector<ScoredPeer>& scored) const override;

 private:
  double threshold_;
};

/// Keeps links to peers scoring at least best * tolerance. With tolerance
/// 1 exactly one peer is kept: the best, ties going to the smallest tie key.
class BestPeer : public Behavior {
 public:
  explicit BestPeer(double tolerance = 1.0) : tolerance_(tolerance) {}
  std::string name() const override { return "BestPeer"; }
  std::vector<Handle> decide(const std::vector<ScoredPeer>& scored) const override;

 private:
  double tolerance_;
};

/// Per-service autonomic configuration.
struct AutoConfig {
  std::string behavior = "BestPeer";
  std::string evaluation = "HammingSimilarity";
  double parameter = 1.0;  // threshold or tolerance, depending on the behavior
  std::vector<Handle> peers;
  ConceptChain chain{"id"};
  std::string probe_method = "getId";
  std::vector<Value> probe_args;
};

struct CycleReport {
  Handle service;
  Handle link_source;  // differs from service when a shared ID redirects links to the parent
  std::size_t peers_queried = 0;
  std::vector<Handle> created;
  std::vector<Handle> removed;
  std::vector<std::pair<Handle, std::string>> failures;

  bool changed() const noexcept { return !created.empty() || !removed.empty(); }
};

/// Owns the dynamic link table and the Auto runners of one node. Cycles call
/// peers through the node, so they obey the same dispatch locks as any call.
class Engine {
 public:
  static constexpr std::chrono::milliseconds kDefaultPeriod{1000};

  explicit Engine(Node& node, int threshold = kDefaultReliabilityThreshold, DecayPolicy decay = {});
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  Node& node() noexcept { return node_; }
  LinkTable& links() noexcept { return links_; }
  const LinkTable& links() const noexcept { return links_; }

  /// Throws BadArgument for unknown behavior/evaluation names,
  /// UnknownService when s does not resolve.
  void install(const Handle& s, AutoConfig config);
  /// Installs from the Autonomic_Manager names set by an admin document;
  /// peers default to the service's siblings.
  void install_from_admin(const Handle& s);
  void uninstall(const Handle& s);
  void set_peers(const Handle& s, std::vector<Handle> peers);
  bool installed(const Handle& s) const;

  /// One evaluate-and-decide pass. Throws NoBehaviorInstalled.
  CycleReport run_auto_cycle(const Handle& s);

  /// Dynamic links whose source is s. Throws UnknownService.
  std::vector<DynamicLink> dynamic_links(const Handle& s) const;

  /// Background runner calling run_auto_cycle every period.
  void start(const Handle& s, std::chrono::milliseconds period = kDefaultPeriod);
  void stop(const Handle& s);
  void stop_all();
  std::int64_t tick() const noexcept { return tick_.load(); }

 private:
  struct Runner;

  Handle link_source_for(const Handle& s) const;

  Node& node_;
  LinkTable links_;
  mutable std::mutex mutex_;
  std::map<Handle, AutoConfig> configs_;
  std::map<Handle, std::unique_ptr<Runner>> runners_;
  std::atomic<std::int64_t> tick_{0};
};

std::unique_ptr<Behavior> make_behavior(const std::string& name, double parameter);
std::unique_ptr<EvaluationFunction> make_evaluation(const std::string& name);
std::vector<std::string> behavior_names();
std::vector<std::string> evaluation_names();

// ---------------------------------------------------------------------------
// Linked search

struct SearchAnswer {
  bool found = false;
  std::string value;
  double quality = 0.0;
  std::optional<Handle> holder;
  bool operator==(const SearchAnswer&) const = default;
};

struct SearchResult {
  SearchAnswer answer;
  std::size_t visited = 0;
};

/// Visits reliable link targets of `entry` for the chain (heaviest first)
/// and stops if one of them answers; otherwise continues breadth-first over
/// `order` until `budget` services have been visited. Throws EmptyNetwork.
SearchResult linked_search(Caller& caller, const LinkTable& links, const Handle& entry, const ConceptChain& chain,
                           const std::string& key, const std::vector<Handle>& order, std::size_t budget);

/// Visits every service in `order`. Throws EmptyNetwork.
SearchResult exhaustive_search(Caller& caller, const std::string& key, const std::vector<Handle>& order);

// ---------------------------------------------------------------------------
// Search experiment

struct ExperimentParams {
  std::size_t n_services = 100;
  std::size_t n_queries = 500;   // warmup queries
  std::uint64_t seed = 1;
  std::size_t n_keys = 100;
  std::size_t holders_per_key = 3;
  std::size_t test_queries = 200;
  double zipf_s = 1.1;
  double update_rate = 0.02;  // chance per test query that one stored item's quality is redrawn
  int threshold = kDefaultReliabilityThreshold;
  bool operator==(const ExperimentParams&) const = default;
};

struct ExperimentReport {
  ExperimentParams params;
  std::size_t nodes_visited_linked = 0;
  std::size_t nodes_visited_exhaustive = 0;
  double quality_linked = 0.0;      // mean answer quality
  double quality_exhaustive = 0.0;
  double reduction = 0.0;           // 1 - visited_linked / visited_exhaustive
  double quality_loss = 0.0;        // 1 - quality_linked / quality_exhaustive
  std::size_t links_formed = 0;
  std::size_t reliable_links = 0;
  bool operator==(const ExperimentReport&) const = default;
};

/// Deterministic for a given parameter set. Throws BadArgument when
/// n_services < 2 or the key/holder counts are inconsistent.
ExperimentReport run_experiment(const ExperimentParams& params);

/// Human-readable summary with the reference figures for comparison.
std::string format_report(const ExperimentReport& report);

// ---------------------------------------------------------------------------
// Self-organisation demo

/// Seeded random lowercase IDs.
std::vector<std::string> random_ids(std::size_t n, std::size_t id_len, std::uint64_t seed);

/// Runs the demo on a live node: n Auto services under a container, each
/// linking to its most similar peer by ID. Rounds are driven by step() or a
/// background runner.
class SelfOrgDemo {
 public:
  struct Status {
    bool created = false;
    bool running = false;
    std::size_t round = 0;
    bool converged = false;
    std::vector<std::string> services;                // names, creation order
    std::map<std::string, std::string> ids;           // name -> ID
    std::map<std::string, std::vector<std::string>> links;  // name -> linked names
  };

  SelfOrgDemo(Engine& engine, std::string container = "SelfOrgDemo");
  ~SelfOrgDemo();

  /// Replaces any previous demo. Throws BadArgument when n < 2 or id_len < 1.
  void create(std::size_t n, std::size_t id_len, std::uint64_t seed);
  /// One round over every service; returns whether any link changed.
  /// Throws DemoNotCreated.
  bool step();
  /// Steps until a round changes nothing or max_rounds is reached.
  Status run_to_convergence(std::size_t max_rounds);
  void start(std::chrono::milliseconds period = Engine::kDefaultPeriod);
  void stop();
  Status status() const;

 private:
  void stop_locked(std::unique_lock<std::mutex>& lock);

  Engine& engine_;
  std::string container_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  bool created_ = false;
  bool stopping_ = false;
  std::size_t round_ = 0;
  bool converged_ = false;
  std::vector<Handle> services_;
  std::map<std::string, std::string> ids_;
  std::thread runner_;
  std::mutex step_mutex_;
};

struct SelfOrgResult {
  std::vector<std::string> ids;
  std::map<std::string, std::vector<std::string>> links;  // ID-free: name -> linked names
  std::map<std::string, std::string> name_to_id;
  std::size_t rounds = 0;
  bool converged = false;
};

SelfOrgResult run_selforg_demo(std::size_t n, std::size_t id_len, std::size_t rounds, std::uint64_t seed);

}  // namespace servnet::autonomic
