#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "servnet/concept_chain.hpp"
#include "servnet/handle.hpp"

namespace servnet::concepts {

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;
  auto operator<=>(const Date&) const = default;
};

/// Parses YYYY-MM-DD with calendar validation.
std::optional<Date> parse_date(std::string_view text) noexcept;
std::string format_date(const Date& d);

/// Typed literal: string, integer, decimal or date.
using Literal = std::variant<std::string, std::int64_t, double, Date>;

std::string literal_type(const Literal& l);
std::string literal_to_string(const Literal& l);
/// Strings in YYYY-MM-DD form become dates.
Literal literal_from_text(std::string_view text);

enum class CompareOp { Eq, Lt, Gt };
/// Integers and decimals compare numerically; other mixed types never
/// satisfy any operator.
bool compare(const Literal& lhs, CompareOp op, const Literal& rhs) noexcept;

struct Record {
  std::string record_id;  // derived from the content when empty
  ConceptChain chain;
  std::map<std::string, Literal> payload;
  Handle source;
  bool operator==(const Record&) const = default;
};

struct CoLink {
  std::string a;  // a < b
  std::string b;
  int hits = 0;
  bool reliable = false;
};

/// One search target: an alias used by predicates and a chain prefix.
struct Target {
  std::string alias;
  ConceptChain prefix;
};

struct FieldRef {
  std::string alias;
  std::string field;
  bool operator==(const FieldRef&) const = default;
};

struct CompareAtom {
  FieldRef lhs;
  CompareOp op = CompareOp::Eq;
  Literal rhs;
};

struct CrossEqualAtom {
  FieldRef lhs;
  FieldRef rhs;
};

/// Conjunction of atoms; empty means true.
struct FilterPredicate {
  std::vector<CompareAtom> compares;
  std::vector<CrossEqualAtom> cross;
};

/// Parses `alias.field OP value` atoms joined by `and`. OP is one of
/// = == < >; value is a quoted string, a number, a date, or another
/// `alias.field` (cross-record equality, `=` only). Unsupported operators
/// such as `near` raise UnknownField.
FilterPredicate parse_predicate(std::string_view text);

/// Records stored under concept chains, with reinforcement of records that
/// are entered together. Single writer, many readers.
class ConceptStore {
 public:
  explicit ConceptStore(int threshold = kDefaultReliabilityThreshold);

  int threshold() const noexcept { return threshold_; }

  /// Stores the records (first write wins per id) and adds one hit to every
  /// unordered pair of distinct ids in the call. Returns the stored ids in
  /// input order. Throws EmptyChain before changing anything.
  std::vector<std::string> add_entry(std::vector<Record> records);

  /// Records whose chain starts with prefix, depth-first over the concept
  /// tree (children in name order, records in insertion order).
  std::vector<Record> query_chain(const ConceptChain& prefix) const;

  /// Cross product of the targets' records, keeping tuples where the
  /// predicate holds and, when reliable_only, every pair is reliable.
  /// Throws UnknownField for fields missing from a candidate record or
  /// aliases not among the targets.
  std::vector<std::vector<Record>> query_filtered(const std::vector<Target>& targets, const FilterPredicate& pred,
                                                  bool reliable_only) const;

  /// Throws UnknownRecord when either id is not stored.
  bool is_reliable(const std::string& a, const std::string& b) const;
  int hits(const std::string& a, const std::string& b) const;
  std::vector<CoLink> colinks() const;
  std::optional<Record> find(const std::string& id) const;
  std::size_t size() const;

 private:
  struct TrieNode {
    std::map<std::string, std::unique_ptr<TrieNode>> children;
    std::vector<std::string> records;
  };

  void collect(const TrieNode& node, std::vector<Record>& out) const;
  bool reliable_locked(const std::string& a, const std::string& b) const;

  int threshold_;
  mutable std::shared_mutex mutex_;
  TrieNode root_;
  std::map<std::string, Record> records_;
  std::map<std::pair<std::string, std::string>, int> hits_;
};

/// Content-derived id for records stored without one.
std::string derive_record_id(const Record& r);

/// Reads JSON lines `{"entry": E, "id"?: ..., "chain": [...], "payload": {...},
/// "source"?: "<U>..</U><S>..</S>"}` and groups consecutive-or-not lines by
/// entry, in order of first appearance. Throws ParseError.
std::vector<std::vector<Record>> load_jsonl(std::istream& in);

}  // namespace servnet::concepts
