#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "servnet/handle.hpp"
#include "servnet/wire.hpp"

namespace servnet::trust {

enum class TxnState {
  Proposed,
  Agreed,
  PaymentEscrowed,
  Executed,
  ResultDelivered,
  Accepted,
  Disputed,
  VerifiedGenuine,
  EscalatedToHuman,
  PaymentReleased,
  Refunded,
  Closed,
};

enum class TxnEvent {
  BothAgree,
  ClientDeposits,
  ProviderExecutes,
  DeliverResult,
  ClientAccepts,
  ClientDisputes,
  VerifyGenuine,
  VerifyNotGenuine,
  Escalate,
  ReleasePayment,
  Close,
};

inline constexpr std::size_t kStateCount = 12;
inline constexpr std::size_t kEventCount = 11;

std::string_view to_string(TxnState s) noexcept;
std::string_view to_string(TxnEvent e) noexcept;
std::optional<TxnState> state_from_string(std::string_view s) noexcept;
std::optional<TxnEvent> event_from_string(std::string_view s) noexcept;
const std::vector<TxnEvent>& all_events();

/// Opaque key standing in for payment details.
struct PaymentToken {
  std::string key;
  bool operator==(const PaymentToken&) const = default;
};

struct EventInput {
  TxnEvent event;
  std::optional<PaymentToken> token;        // ClientDeposits
  std::optional<wire::ParamValue> result;   // DeliverResult
  std::optional<std::string> note;          // ClientDisputes
};

/// One transaction between a client and a provider, with a mediator holding
/// the payment token. Values only: advance() returns the next state.
struct MediatedTransaction {
  std::string txn_id;
  Handle client;
  Handle provider;
  Handle mediator;
  bool direct_delivery = false;  // result goes provider -> client instead of via the mediator
  TxnState state = TxnState::Proposed;
  std::optional<PaymentToken> escrow;         // held by the mediator
  std::optional<PaymentToken> provider_token; // set once, on release
  std::optional<PaymentToken> refunded_token; // returned to the client
  std::optional<wire::ParamValue> result;
  std::optional<std::string> dispute_note;
  Handle result_from;  // who handed the result to the client
  bool client_notified = false;
  int release_count = 0;

  bool operator==(const MediatedTransaction&) const = default;
};

bool is_terminal(TxnState s) noexcept;
/// Exact enabling set of the transition table; empty for terminal states.
std::set<TxnEvent> enabled_events(TxnState s);
/// Throws IllegalTransition when the event is not enabled, BadArgument when
/// a required payload (token, result) is missing.
MediatedTransaction advance(MediatedTransaction t, const EventInput& input);
/// What the provider can see of the payment: nothing before release.
std::optional<PaymentToken> provider_view(const MediatedTransaction& t) noexcept;

/// Verification outcome reported by an external checker.
enum class Verdict { Genuine, NotGenuine, Unknown };
using Verifier = std::function<Verdict(const MediatedTransaction&)>;
/// Applies the verdict to a Disputed transaction.
MediatedTransaction resolve_dispute(MediatedTransaction t, const Verifier& verifier);

/// Registration details a provider presents; the mediator checks them
/// against a table populated by the operator.
class CredentialRegistry {
 public:
  void add(std::string registration_key, std::string company, Handle provider);
  bool verify(const std::string& registration_key, const std::string& company, const Handle& provider) const;

 private:
  struct Entry {
    std::string company;
    Handle provider;
  };
  std::map<std::string, Entry> entries_;
};

/// Step-by-step record of a simulated transaction.
struct LogEntry {
  std::size_t step = 0;
  TxnEvent event;
  TxnState from;
  TxnState to;
  bool escrow_held = false;
  bool provider_sees_token = false;
  bool client_notified = false;
  std::optional<std::string> error;  // set when the event was rejected
};

struct SimulationResult {
  MediatedTransaction final;
  std::vector<LogEntry> log;
  bool rejected = false;  // some event was illegal; the rest were skipped
};

/// Feeds events in order, stopping at the first illegal one. Checks after
/// every step that the provider never sees the token before release; a
/// violation throws BadArgument (it would be a bug in the table).
SimulationResult simulate(MediatedTransaction start, const std::vector<EventInput>& events);

// ---------------------------------------------------------------------------
// Known-answer question game

enum class RoundOutcome { Honest, CheatUndetected, CheatDetected };
std::string_view to_string(RoundOutcome o) noexcept;

/// k questions; the client knows every answer except the genuine one.
struct QuestionGame {
  std::vector<std::string> questions;
  std::vector<std::string> truth;                      // what an honest provider answers
  std::vector<std::optional<std::string>> known_answers;  // nullopt exactly at genuine_index
  std::size_t genuine_index = 0;

  std::size_t k() const noexcept { return questions.size(); }
};

/// Throws BadArgument when k < 2.
QuestionGame make_question_game(std::size_t k, std::mt19937_64& rng);

/// Sees only the questions, never which one is genuine.
using ProviderStrategy = std::function<std::vector<std::string>(const std::vector<std::string>& questions)>;

ProviderStrategy honest_strategy();
/// Answers every question correctly except one chosen uniformly at random.
ProviderStrategy single_wrong_strategy(std::mt19937_64& rng);

/// Throws BadArgument when the strategy returns the wrong number of answers.
RoundOutcome question_game_round(const QuestionGame& game, const ProviderStrategy& strategy);

/// Fraction of rounds a single-random-wrong-answer cheater goes undetected.
/// Deterministic for a seed. Throws BadArgument when k < 2 or trials < 1.
double cheat_evasion_estimate(std::size_t k, std::size_t trials, std::uint64_t seed);

}  // namespace servnet::trust
