#include "servnet/concepts.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <mutex>

#include "servnet/codec_util.hpp"
#include "servnet/error.hpp"

namespace servnet::concepts {

std::optional<Date> parse_date(std::string_view text) noexcept {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  const auto y = num(0, 4);
  const auto m = num(5, 2);
  const auto d = num(8, 2);
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1) return std::nullopt;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (*y % 4 == 0 && *y % 100 != 0) || *y % 400 == 0;
  const int limit = kDays[*m - 1] + (*m == 2 && leap ? 1 : 0);
  if (*d > limit) return std::nullopt;
  return Date{*y, *m, *d};
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

std::string literal_type(const Literal& l) {
  switch (l.index()) {
    case 0: return "string";
    case 1: return "int";
    case 2: return "decimal";
    default: return "date";
  }
}

std::string literal_to_string(const Literal& l) {
  if (const auto* s = std::get_if<std::string>(&l)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&l)) return std::to_string(*i);
  if (const auto* d = std::get_if<Date>(&l)) return format_date(*d);
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, std::get<double>(l));
  return std::string(buf, end);
}

Literal literal_from_text(std::string_view text) {
  if (auto d = parse_date(text)) return *d;
  return std::string(text);
}

namespace {

std::optional<double> as_number(const Literal& l) noexcept {
  if (const auto* i = std::get_if<std::int64_t>(&l)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&l)) return *d;
  return std::nullopt;
}

template <class T>
bool apply(const T& a, CompareOp op, const T& b) {
  switch (op) {
    case CompareOp::Eq: return a == b;
    case CompareOp::Lt: return a < b;
    case CompareOp::Gt: return a > b;
  }
  return false;
}

}  // namespace

bool compare(const Literal& lhs, CompareOp op, const Literal& rhs) noexcept {
  if (lhs.index() == rhs.index()) {
    return std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          return apply(a, op, std::get<T>(rhs));
        },
        lhs);
  }
  const auto a = as_number(lhs);
  const auto b = as_number(rhs);
  return a && b && apply(*a, op, *b);
}

// ---------------------------------------------------------------------------
// Predicate parsing

namespace {

[[noreturn]] void predicate_error(const std::string& msg) { fail(ErrorKind::UnknownField, "predicate: " + msg); }

struct Lexer {
  std::string_view text;
  std::size_t pos = 0;

  void skip() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool done() {
    skip();
    return pos >= text.size();
  }
  std::string word() {
    skip();
    const auto start = pos;
    while (pos < text.size()) {
      const char c = text[pos];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' || c == '+') {
        ++pos;
      } else {
        break;
      }
    }
    return std::string(text.substr(start, pos - start));
  }
  std::string op() {
    skip();
    if (pos < text.size() && (text[pos] == '<' || text[pos] == '>')) return std::string(1, text[pos++]);
    if (pos < text.size() && text[pos] == '=') {
      ++pos;
      if (pos < text.size() && text[pos] == '=') ++pos;
      return "=";
    }
    return word();
  }
};

std::optional<FieldRef> field_ref(const std::string& w) {
  const auto dot = w.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == w.size()) return std::nullopt;
  if (std::isdigit(static_cast<unsigned char>(w[0])) || w[0] == '-' || w[0] == '+') return std::nullopt;
  return FieldRef{w.substr(0, dot), w.substr(dot + 1)};
}

Literal number_or_date(const std::string& w) {
  if (auto d = parse_date(w)) return *d;
  std::int64_t i = 0;
  auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), i);
  if (ec == std::errc{} && p == w.data() + w.size()) return i;
  double d = 0;
  auto [p2, ec2] = std::from_chars(w.data(), w.data() + w.size(), d);
  if (ec2 == std::errc{} && p2 == w.data() + w.size() && std::isfinite(d)) return d;
  predicate_error("cannot read value '" + w + "'");
}

}  // namespace

FilterPredicate parse_predicate(std::string_view text) {
  FilterPredicate pred;
  Lexer lx{text};
  if (lx.done()) return pred;
  while (true) {
    const auto lhs_word = lx.word();
    const auto lhs = field_ref(lhs_word);
    if (!lhs) predicate_error("expected alias.field, got '" + lhs_word + "'");
    const auto op = lx.op();
    CompareOp cop;
    if (op == "=") cop = CompareOp::Eq;
    else if (op == "<") cop = CompareOp::Lt;
    else if (op == ">") cop = CompareOp::Gt;
    else predicate_error("unsupported operator '" + op + "'");

    lx.skip();
    if (lx.pos < text.size() && (text[lx.pos] == '\'' || text[lx.pos] == '"')) {
      const char quote = text[lx.pos++];
      const auto end = text.find(quote, lx.pos);
      if (end == std::string_view::npos) predicate_error("unterminated string");
      pred.compares.push_back({*lhs, cop, literal_from_text(text.substr(lx.pos, end - lx.pos))});
      lx.pos = end + 1;
    } else {
      const auto w = lx.word();
      if (w.empty()) predicate_error("missing value after '" + lhs_word + "'");
      if (const auto rhs = field_ref(w)) {
        if (cop != CompareOp::Eq) predicate_error("fields can only be compared for equality");
        pred.cross.push_back({*lhs, *rhs});
      } else {
        pred.compares.push_back({*lhs, cop, number_or_date(w)});
      }
    }
    if (lx.done()) break;
    auto joiner = lx.word();
    std::transform(joiner.begin(), joiner.end(), joiner.begin(), [](unsigned char c) { return std::tolower(c); });
    if (joiner != "and") predicate_error("expected 'and', got '" + joiner + "'");
  }
  return pred;
}

// ---------------------------------------------------------------------------
// Store

std::string derive_record_id(const Record& r) {
  nlohmann::json j;
  j["chain"] = r.chain;
  auto& payload = j["payload"];
  payload = nlohmann::json::object();
  for (const auto& [k, v] : r.payload) payload[k] = {literal_type(v), literal_to_string(v)};
  return "r-" + codec::sha256_hex(j.dump()).substr(0, 16);
}

ConceptStore::ConceptStore(int threshold) : threshold_(threshold) {
  if (threshold < 1) fail(ErrorKind::BadArgument, "reliability threshold must be at least 1");
}

std::vector<std::string> ConceptStore::add_entry(std::vector<Record> records) {
  for (const auto& r : records) {
    if (r.chain.empty()) fail(ErrorKind::EmptyChain, "record without a concept chain");
  }
  std::vector<std::string> ids;
  ids.reserve(records.size());
  std::unique_lock lock(mutex_);
  for (auto& r : records) {
    if (r.record_id.empty()) r.record_id = derive_record_id(r);
    ids.push_back(r.record_id);
    if (records_.contains(r.record_id)) continue;
    auto* node = &root_;
    for (const auto& c : r.chain) {
      auto& child = node->children[c];
      if (!child) child = std::make_unique<TrieNode>();
      node = child.get();
    }
    node->records.push_back(r.record_id);
    records_.emplace(r.record_id, std::move(r));
  }
  const std::set<std::string> distinct(ids.begin(), ids.end());
  for (auto a = distinct.begin(); a != distinct.end(); ++a) {
    for (auto b = std::next(a); b != distinct.end(); ++b) ++hits_[{*a, *b}];
  }
  return ids;
}

void ConceptStore::collect(const TrieNode& node, std::vector<Record>& out) const {
  for (const auto& id : node.records) out.push_back(records_.at(id));
  for (const auto& [name, child] : node.children) collect(*child, out);
}

std::vector<Record> ConceptStore::query_chain(const ConceptChain& prefix) const {
  std::shared_lock lock(mutex_);
  const TrieNode* node = &root_;
  for (const auto& c : prefix) {
    const auto it = node->children.find(c);
    if (it == node->children.end()) return {};
    node = it->second.get();
  }
  std::vector<Record> out;
  collect(*node, out);
  return out;
}

bool ConceptStore::reliable_locked(const std::string& a, const std::string& b) const {
  if (a == b) return false;
  const auto it = hits_.find(a < b ? std::pair(a, b) : std::pair(b, a));
  return it != hits_.end() && it->second >= threshold_;
}

namespace {

const Literal& field_of(const Record& r, const std::string& field) {
  const auto it = r.payload.find(field);
  if (it == r.payload.end()) {
    fail(ErrorKind::UnknownField, "record '" + r.record_id + "' has no field '" + field + "'");
  }
  return it->second;
}

}  // namespace

std::vector<std::vector<Record>> ConceptStore::query_filtered(const std::vector<Target>& targets,
                                                              const FilterPredicate& pred, bool reliable_only) const {
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!position.emplace(targets[i].alias, i).second) {
      fail(ErrorKind::BadArgument, "alias '" + targets[i].alias + "' used twice");
    }
  }
  auto pos_of = [&](const FieldRef& f) {
    const auto it = position.find(f.alias);
    if (it == position.end()) fail(ErrorKind::UnknownField, "no target named '" + f.alias + "'");
    return it->second;
  };

  // Atoms are checked as soon as every position they mention is bound.
  std::vector<std::vector<const CompareAtom*>> compares_at(targets.size());
  std::vector<std::vector<const CrossEqualAtom*>> cross_at(targets.size());
  for (const auto& a : pred.compares) compares_at[pos_of(a.lhs)].push_back(&a);
  for (const auto& a : pred.cross) cross_at[std::max(pos_of(a.lhs), pos_of(a.rhs))].push_back(&a);

  std::vector<std::vector<Record>> candidates;
  for (const auto& t : targets) candidates.push_back(query_chain(t.prefix));

  std::shared_lock lock(mutex_);
  // Every referenced field must exist on every candidate of its target.
  auto require_field = [&](const FieldRef& f) {
    for (const auto& r : candidates[pos_of(f)]) field_of(r, f.field);
  };
  for (const auto& a : pred.compares) require_field(a.lhs);
  for (const auto& a : pred.cross) {
    require_field(a.lhs);
    require_field(a.rhs);
  }

  std::vector<std::vector<Record>> out;
  if (targets.empty()) return out;
  std::vector<const Record*> tuple(targets.size());
  auto extend = [&](auto&& self, std::size_t depth) -> void {
    if (depth == targets.size()) {
      std::vector<Record> row;
      for (const auto* r : tuple) row.push_back(*r);
      out.push_back(std::move(row));
      return;
    }
    for (const auto& r : candidates[depth]) {
      tuple[depth] = &r;
      bool ok = true;
      for (const auto* a : compares_at[depth]) {
        if (!compare(field_of(r, a->lhs.field), a->op, a->rhs)) {
          ok = false;
          break;
        }
      }
      for (std::size_t i = 0; ok && i < cross_at[depth].size(); ++i) {
        const auto* a = cross_at[depth][i];
        const auto& l = field_of(*tuple[pos_of(a->lhs)], a->lhs.field);
        const auto& rr = field_of(*tuple[pos_of(a->rhs)], a->rhs.field);
        ok = compare(l, CompareOp::Eq, rr);
      }
      if (ok && reliable_only) {
        for (std::size_t i = 0; ok && i < depth; ++i) ok = reliable_locked(tuple[i]->record_id, r.record_id);
      }
      if (ok) self(self, depth + 1);
    }
  };
  extend(extend, 0);
  return out;
}

bool ConceptStore::is_reliable(const std::string& a, const std::string& b) const {
  std::shared_lock lock(mutex_);
  if (!records_.contains(a)) fail(ErrorKind::UnknownRecord, "no record '" + a + "'");
  if (!records_.contains(b)) fail(ErrorKind::UnknownRecord, "no record '" + b + "'");
  return reliable_locked(a, b);
}

int ConceptStore::hits(const std::string& a, const std::string& b) const {
  std::shared_lock lock(mutex_);
  const auto it = hits_.find(a < b ? std::pair(a, b) : std::pair(b, a));
  return it == hits_.end() ? 0 : it->second;
}

std::vector<CoLink> ConceptStore::colinks() const {
  std::shared_lock lock(mutex_);
  std::vector<CoLink> out;
  for (const auto& [pair, n] : hits_) out.push_back({pair.first, pair.second, n, n >= threshold_});
  return out;
}

std::optional<Record> ConceptStore::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = records_.find(id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::size_t ConceptStore::size() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

// ---------------------------------------------------------------------------
// JSON lines

namespace {

Literal literal_from_json(const nlohmann::json& v, const std::string& field) {
  if (v.is_string()) return literal_from_text(v.get<std::string>());
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) return v.get<double>();
  fail(ErrorKind::ParseError, "field '" + field + "' must be a string or a number");
}

}  // namespace

std::vector<std::vector<Record>> load_jsonl(std::istream& in) {
  std::vector<std::vector<Record>> entries;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "line " + std::to_string(lineno) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::ParseError, where + e.what());
    }
    if (!j.is_object() || !j.contains("entry") || !j.contains("chain") || !j["chain"].is_array()) {
      fail(ErrorKind::ParseError, where + "needs \"entry\" and a \"chain\" array");
    }
    Record r;
    try {
      const auto entry = j["entry"].is_string() ? j["entry"].get<std::string>() : j["entry"].dump();
      for (const auto& c : j["chain"]) r.chain.push_back(c.get<std::string>());
      if (j.contains("id")) r.record_id = j["id"].get<std::string>();
      if (j.contains("payload")) {
        if (!j["payload"].is_object()) fail(ErrorKind::ParseError, where + "\"payload\" must be an object");
        for (const auto& [k, v] : j["payload"].items()) r.payload[k] = literal_from_json(v, k);
      }
      if (j.contains("source")) r.source = parse_handle(j["source"].get<std::string>());
      const auto [it, fresh] = index.try_emplace(entry, entries.size());
      if (fresh) entries.emplace_back();
      entries[it->second].push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::ParseError, where + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::ParseError, where + e.what());
    }
  }
  return entries;
}

}  // namespace servnet::concepts
