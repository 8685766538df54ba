#include "servnet/trust.hpp"

#include <array>

#include "servnet/error.hpp"

namespace servnet::trust {
namespace {

constexpr std::array<std::string_view, kStateCount> kStateNames = {
    "Proposed",        "Agreed",   "PaymentEscrowed",  "Executed",        "ResultDelivered", "Accepted",
    "Disputed",        "VerifiedGenuine", "EscalatedToHuman", "PaymentReleased", "Refunded",        "Closed"};

constexpr std::array<std::string_view, kEventCount> kEventNames = {
    "BothAgree",     "ClientDeposits", "ProviderExecutes", "DeliverResult", "ClientAccepts", "ClientDisputes",
    "VerifyGenuine", "VerifyNotGenuine", "Escalate",       "ReleasePayment", "Close"};

struct Edge {
  TxnState from;
  TxnEvent event;
  TxnState to;
};

// The whole transition table. Nothing else moves a transaction.
constexpr std::array<Edge, 12> kEdges = {{
    {TxnState::Proposed, TxnEvent::BothAgree, TxnState::Agreed},
    {TxnState::Agreed, TxnEvent::ClientDeposits, TxnState::PaymentEscrowed},
    {TxnState::PaymentEscrowed, TxnEvent::ProviderExecutes, TxnState::Executed},
    {TxnState::Executed, TxnEvent::DeliverResult, TxnState::ResultDelivered},
    {TxnState::ResultDelivered, TxnEvent::ClientAccepts, TxnState::Accepted},
    {TxnState::ResultDelivered, TxnEvent::ClientDisputes, TxnState::Disputed},
    {TxnState::Disputed, TxnEvent::VerifyGenuine, TxnState::VerifiedGenuine},
    {TxnState::Disputed, TxnEvent::VerifyNotGenuine, TxnState::Refunded},
    {TxnState::Disputed, TxnEvent::Escalate, TxnState::EscalatedToHuman},
    {TxnState::Accepted, TxnEvent::ReleasePayment, TxnState::PaymentReleased},
    {TxnState::VerifiedGenuine, TxnEvent::ReleasePayment, TxnState::PaymentReleased},
    {TxnState::PaymentReleased, TxnEvent::Close, TxnState::Closed},
}};  // Refunded, EscalatedToHuman and Closed have no outgoing edges.

const Edge* find_edge(TxnState from, TxnEvent event) noexcept {
  for (const auto& e : kEdges) {
    if (e.from == from && e.event == event) return &e;
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(TxnState s) noexcept { return kStateNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(TxnEvent e) noexcept { return kEventNames[static_cast<std::size_t>(e)]; }

std::optional<TxnState> state_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kStateNames.size(); ++i) {
    if (kStateNames[i] == s) return static_cast<TxnState>(i);
  }
  return std::nullopt;
}

std::optional<TxnEvent> event_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == s) return static_cast<TxnEvent>(i);
  }
  return std::nullopt;
}

const std::vector<TxnEvent>& all_events() {
  static const std::vector<TxnEvent> events = [] {
    std::vector<TxnEvent> out;
    for (std::size_t i = 0; i < kEventCount; ++i) out.push_back(static_cast<TxnEvent>(i));
    return out;
  }();
  return events;
}

bool is_terminal(TxnState s) noexcept {
  return s == TxnState::Closed || s == TxnState::EscalatedToHuman || s == TxnState::Refunded;
}

std::set<TxnEvent> enabled_events(TxnState s) {
  std::set<TxnEvent> out;
  for (const auto e : all_events()) {
    if (find_edge(s, e)) out.insert(e);
  }
  return out;
}

MediatedTransaction advance(MediatedTransaction t, const EventInput& input) {
  const auto* edge = find_edge(t.state, input.event);
  if (!edge) {
    fail(ErrorKind::IllegalTransition, std::string(to_string(input.event)) + " is not allowed in state " +
                                           std::string(to_string(t.state)));
  }
  switch (input.event) {
    case TxnEvent::ClientDeposits:
      if (!input.token || input.token->key.empty()) fail(ErrorKind::BadArgument, "deposit needs a payment token");
      t.escrow = input.token;
      break;
    case TxnEvent::DeliverResult:
      if (!input.result) fail(ErrorKind::BadArgument, "delivery needs a result");
      t.result = input.result;
      t.result_from = t.direct_delivery ? t.provider : t.mediator;
      break;
    case TxnEvent::ClientDisputes:
      t.dispute_note = input.note.value_or("");
      break;
    case TxnEvent::VerifyGenuine:
      t.client_notified = true;
      break;
    case TxnEvent::VerifyNotGenuine:
      t.refunded_token = std::move(t.escrow);
      t.escrow.reset();
      break;
    case TxnEvent::ReleasePayment:
      t.provider_token = std::move(t.escrow);
      t.escrow.reset();
      ++t.release_count;
      break;
    default:
      break;
  }
  t.state = edge->to;
  return t;
}

std::optional<PaymentToken> provider_view(const MediatedTransaction& t) noexcept {
  if (t.state != TxnState::PaymentReleased && t.state != TxnState::Closed) return std::nullopt;
  return t.provider_token;
}

MediatedTransaction resolve_dispute(MediatedTransaction t, const Verifier& verifier) {
  if (t.state != TxnState::Disputed) {
    fail(ErrorKind::IllegalTransition, "only a disputed transaction can be verified (state " +
                                           std::string(to_string(t.state)) + ")");
  }
  switch (verifier(t)) {
    case Verdict::Genuine: return advance(std::move(t), {TxnEvent::VerifyGenuine, {}, {}, {}});
    case Verdict::NotGenuine: return advance(std::move(t), {TxnEvent::VerifyNotGenuine, {}, {}, {}});
    case Verdict::Unknown: break;
  }
  return advance(std::move(t), {TxnEvent::Escalate, {}, {}, {}});
}

void CredentialRegistry::add(std::string registration_key, std::string company, Handle provider) {
  entries_[std::move(registration_key)] = Entry{std::move(company), std::move(provider)};
}

bool CredentialRegistry::verify(const std::string& registration_key, const std::string& company,
                                const Handle& provider) const {
  const auto it = entries_.find(registration_key);
  return it != entries_.end() && it->second.company == company && it->second.provider == provider;
}

SimulationResult simulate(MediatedTransaction start, const std::vector<EventInput>& events) {
  SimulationResult out;
  out.final = std::move(start);
  for (std::size_t i = 0; i < events.size(); ++i) {
    LogEntry entry;
    entry.step = i;
    entry.event = events[i].event;
    entry.from = out.final.state;
    try {
      out.final = advance(std::move(out.final), events[i]);
    } catch (const Error& err) {
      entry.to = entry.from;
      entry.error = err.what();
      entry.escrow_held = out.final.escrow.has_value();
      out.log.push_back(std::move(entry));
      out.rejected = true;
      break;
    }
    entry.to = out.final.state;
    entry.escrow_held = out.final.escrow.has_value();
    entry.provider_sees_token = provider_view(out.final).has_value();
    entry.client_notified = out.final.client_notified;
    if (entry.provider_sees_token && entry.to != TxnState::PaymentReleased && entry.to != TxnState::Closed) {
      fail(ErrorKind::BadArgument, "provider saw the payment token in state " + std::string(to_string(entry.to)));
    }
    out.log.push_back(std::move(entry));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(RoundOutcome o) noexcept {
  switch (o) {
    case RoundOutcome::Honest: return "Honest";
    case RoundOutcome::CheatUndetected: return "CheatUndetected";
    case RoundOutcome::CheatDetected: return "CheatDetected";
  }
  return "?";
}

QuestionGame make_question_game(std::size_t k, std::mt19937_64& rng) {
  if (k < 2) fail(ErrorKind::BadArgument, "the question game needs at least 2 questions");
  QuestionGame g;
  std::uniform_int_distribution<std::int64_t> operand(2, 99'999);
  for (std::size_t i = 0; i < k; ++i) {
    const auto n = operand(rng);
    g.questions.push_back("square " + std::to_string(n));
    g.truth.push_back(std::to_string(n * n));
  }
  g.genuine_index = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
  for (std::size_t i = 0; i < k; ++i) {
    g.known_answers.push_back(i == g.genuine_index ? std::nullopt : std::optional(g.truth[i]));
  }
  return g;
}

namespace {

std::string honest_answer(const std::string& question) {
  const auto n = std::stoll(question.substr(question.find(' ') + 1));
  return std::to_string(n * n);
}

}  // namespace

ProviderStrategy honest_strategy() {
  return [](const std::vector<std::string>& questions) {
    std::vector<std::string> out;
    for (const auto& q : questions) out.push_back(honest_answer(q));
    return out;
  };
}

ProviderStrategy single_wrong_strategy(std::mt19937_64& rng) {
  return [&rng](const std::vector<std::string>& questions) {
    std::vector<std::string> out;
    for (const auto& q : questions) out.push_back(honest_answer(q));
    const auto wrong = std::uniform_int_distribution<std::size_t>(0, questions.size() - 1)(rng);
    out[wrong] += "1";
    return out;
  };
}

RoundOutcome question_game_round(const QuestionGame& game, const ProviderStrategy& strategy) {
  const auto answers = strategy(game.questions);
  if (answers.size() != game.k()) fail(ErrorKind::BadArgument, "provider must answer every question");
  bool genuine_wrong = false;
  for (std::size_t i = 0; i < game.k(); ++i) {
    if (game.known_answers[i]) {
      if (answers[i] != *game.known_answers[i]) return RoundOutcome::CheatDetected;
    } else if (answers[i] != game.truth[i]) {
      genuine_wrong = true;
    }
  }
  return genuine_wrong ? RoundOutcome::CheatUndetected : RoundOutcome::Honest;
}

double cheat_evasion_estimate(std::size_t k, std::size_t trials, std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::BadArgument, "the question game needs at least 2 questions");
  if (trials < 1) fail(ErrorKind::BadArgument, "at least one trial is needed");
  std::mt19937_64 game_rng(seed);
  std::seed_seq provider_seed{seed, std::uint64_t{0xc0ffee}};
  std::mt19937_64 provider_rng(provider_seed);
  const auto cheater = single_wrong_strategy(provider_rng);
  std::size_t undetected = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    if (question_game_round(make_question_game(k, game_rng), cheater) == RoundOutcome::CheatUndetected) ++undetected;
  }
  return static_cast<double>(undetected) / static_cast<double>(trials);
}

}  // namespace servnet::trust
