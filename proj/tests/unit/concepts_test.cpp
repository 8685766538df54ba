#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "servnet/concepts.hpp"
#include "servnet/error.hpp"
#include "support/generators.hpp"
#include "support/travel_oracle.hpp"

using namespace servnet;
using namespace servnet::concepts;
using servnet::testgen::Rng;
using servnet::testgen::coin;
using servnet::testgen::uniform;

namespace {

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::BadArgument;
}

Record rec(std::string id, ConceptChain chain, std::map<std::string, Literal> payload = {}) {
  return Record{std::move(id), std::move(chain), std::move(payload), {}};
}

std::vector<std::string> ids_of(const std::vector<Record>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.record_id);
  return out;
}

// Small alphabet so chains share prefixes often.
ConceptChain random_chain(Rng& rng) {
  static const std::vector<std::string> names = {"a", "b", "c", "ab", "Z"};
  ConceptChain c(uniform(rng, 1, 4));
  for (auto& n : c) n = names[uniform(rng, 0, names.size() - 1)];
  return c;
}

Literal random_literal(Rng& rng, int field) {
  switch (field) {
    case 0: return static_cast<std::int64_t>(uniform(rng, 0, 9));
    case 1: return std::string(1, static_cast<char>('p' + uniform(rng, 0, 3)));
    case 2: return Date{2009, 12, static_cast<int>(uniform(rng, 1, 4))};
    default: return static_cast<double>(uniform(rng, 0, 8)) / 2.0;
  }
}

const std::vector<std::string> kFields = {"x", "y", "z", "w"};

}  // namespace

TEST_CASE("dates are validated against the calendar") {
  CHECK(parse_date("2009-12-01") == Date{2009, 12, 1});
  CHECK(parse_date("2008-02-29").has_value());
  CHECK_FALSE(parse_date("2009-02-29").has_value());
  CHECK(parse_date("2000-02-29").has_value());
  CHECK_FALSE(parse_date("1900-02-29").has_value());
  CHECK_FALSE(parse_date("2009-13-01").has_value());
  CHECK_FALSE(parse_date("2009-04-31").has_value());
  CHECK_FALSE(parse_date("2009-4-1").has_value());
  CHECK_FALSE(parse_date("2009-12-0a").has_value());
  CHECK(format_date(Date{987, 3, 4}) == "0987-03-04");
}

TEST_CASE("typed literals compare within their type and across numbers") {
  CHECK(compare(Literal{std::int64_t{2}}, CompareOp::Lt, Literal{2.5}));
  CHECK(compare(Literal{2.0}, CompareOp::Eq, Literal{std::int64_t{2}}));
  CHECK(compare(Literal{Date{2009, 12, 1}}, CompareOp::Lt, Literal{Date{2009, 12, 3}}));
  CHECK(compare(Literal{std::string("b")}, CompareOp::Gt, Literal{std::string("a")}));
  for (auto op : {CompareOp::Eq, CompareOp::Lt, CompareOp::Gt}) {
    CHECK_FALSE(compare(Literal{std::string("2009-12-01")}, op, Literal{Date{2009, 12, 1}}));
    CHECK_FALSE(compare(Literal{std::string("1")}, op, Literal{std::int64_t{1}}));
  }
  CHECK(literal_from_text("2009-12-01").index() == 3);
  CHECK(literal_from_text("Paris").index() == 0);
  CHECK(literal_to_string(Literal{140.5}) == "140.5");
}

TEST_CASE("add_entry stores, keeps the first write and counts each pair once") {
  ConceptStore s(2);
  const auto ids = s.add_entry({rec("h", {"hotel", "FR"}, {{"cost", std::int64_t{1}}}), rec("f", {"flight"}),
                                rec("h", {"hotel"}, {{"cost", std::int64_t{9}}})});
  CHECK(ids == std::vector<std::string>{"h", "f", "h"});
  CHECK(s.size() == 2);
  CHECK(std::get<std::int64_t>(s.find("h")->payload.at("cost")) == 1);
  CHECK(s.find("h")->chain == ConceptChain{"hotel", "FR"});
  CHECK(s.hits("h", "f") == 1);
  CHECK(s.hits("h", "h") == 0);
  CHECK_FALSE(s.is_reliable("h", "f"));
  s.add_entry({rec("f", {"flight"}), rec("h", {"x"})});
  CHECK(s.is_reliable("f", "h"));
  CHECK(s.is_reliable("h", "f"));
  CHECK_FALSE(s.is_reliable("h", "h"));
  CHECK(kind_of([&] { (void)s.is_reliable("h", "nope"); }) == ErrorKind::UnknownRecord);
  CHECK(kind_of([&] { ConceptStore bad(0); }) == ErrorKind::BadArgument);
}

TEST_CASE("an empty chain rejects the whole entry") {
  ConceptStore s;
  CHECK(kind_of([&] { s.add_entry({rec("a", {"x"}), rec("b", {})}); }) == ErrorKind::EmptyChain);
  CHECK(s.size() == 0);
  CHECK(s.colinks().empty());
}

TEST_CASE("derived ids depend only on content") {
  ConceptStore s;
  const auto a = s.add_entry({rec("", {"hotel"}, {{"cost", std::int64_t{3}}})});
  const auto b = s.add_entry({rec("", {"hotel"}, {{"cost", std::int64_t{3}}})});
  const auto c = s.add_entry({rec("", {"hotel"}, {{"cost", 3.0}})});
  CHECK(a == b);
  CHECK(a != c);
  CHECK(s.size() == 2);
  CHECK(a[0].rfind("r-", 0) == 0);
}

TEST_CASE("property: query_chain returns exactly the prefix matches in tree order") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Rng rng(seed);
    ConceptStore s;
    std::vector<Record> inserted;
    const auto n = uniform(rng, 0, 60);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = rec("r" + std::to_string(i), random_chain(rng));
      inserted.push_back(r);
      s.add_entry({r});
    }
    for (int q = 0; q < 20; ++q) {
      ConceptChain prefix(uniform(rng, 0, 3));
      for (auto& p : prefix) p = random_chain(rng)[0];
      // Tree order is a stable sort by chain: a node's own records precede
      // its children, children go in name order.
      std::vector<Record> expect;
      for (const auto& r : inserted) {
        if (is_prefix(prefix, r.chain)) expect.push_back(r);
      }
      std::stable_sort(expect.begin(), expect.end(), [](const Record& a, const Record& b) { return a.chain < b.chain; });
      CHECK(ids_of(s.query_chain(prefix)) == ids_of(expect));
    }
  }
}

TEST_CASE("property: hit counts never decrease and reliability is symmetric") {
  Rng rng(77);
  ConceptStore s(3);
  std::map<std::pair<std::string, std::string>, int> last;
  for (int step = 0; step < 300; ++step) {
    std::vector<Record> entry;
    const auto k = uniform(rng, 1, 4);
    for (std::size_t i = 0; i < k; ++i) entry.push_back(rec("r" + std::to_string(uniform(rng, 0, 9)), {"c"}));
    s.add_entry(entry);
    for (int a = 0; a < 10; ++a) {
      for (int b = 0; b < 10; ++b) {
        const auto ia = "r" + std::to_string(a);
        const auto ib = "r" + std::to_string(b);
        const int h = s.hits(ia, ib);
        CHECK(h >= last[{ia, ib}]);
        last[{ia, ib}] = h;
        if (s.find(ia) && s.find(ib)) {
          CHECK(s.is_reliable(ia, ib) == s.is_reliable(ib, ia));
          CHECK(s.is_reliable(ia, ib) == (a != b && h >= 3));
        }
      }
    }
  }
}

TEST_CASE("predicates parse into compare and cross-equality atoms") {
  const auto p = parse_predicate(servnet::testgen::kTravelPredicate);
  CHECK(p.compares.size() == 7);
  CHECK(p.cross.size() == 2);
  CHECK(p.compares[0].lhs == FieldRef{"h", "city"});
  CHECK(std::get<std::string>(p.compares[0].rhs) == "Paris");
  CHECK(p.compares[2].op == CompareOp::Lt);
  CHECK(std::get<std::int64_t>(p.compares[2].rhs) == 150);
  CHECK(std::get<Date>(p.compares[3].rhs) == Date{2009, 12, 1});
  CHECK(p.cross[1].rhs == FieldRef{"f", "arrival_day"});

  const auto q = parse_predicate("a.x > -2.5 AND a.y == \"it's\"");
  CHECK(std::get<double>(q.compares[0].rhs) == -2.5);
  CHECK(q.compares[1].op == CompareOp::Eq);
  CHECK(std::get<std::string>(q.compares[1].rhs) == "it's");
  CHECK(parse_predicate("  ").compares.empty());

  for (const char* bad : {"h.city near 'Paris'", "city = 'Paris'", "h.x = ", "h.x = 'open", "h.x = 1 or h.y = 2",
                          "h.x < t.y", "h.x = 12abc"}) {
    CAPTURE(bad);
    CHECK(kind_of([&] { (void)parse_predicate(bad); }) == ErrorKind::UnknownField);
  }
}

TEST_CASE("query_filtered reports missing fields and unknown aliases") {
  ConceptStore s;
  s.add_entry({rec("a", {"x"}, {{"f", std::int64_t{1}}}), rec("b", {"y"}, {})});
  const std::vector<Target> t = {{"a", {"x"}}, {"b", {"y"}}};
  CHECK(kind_of([&] { (void)s.query_filtered(t, parse_predicate("b.f = 1"), false); }) == ErrorKind::UnknownField);
  CHECK(kind_of([&] { (void)s.query_filtered(t, parse_predicate("c.f = 1"), false); }) == ErrorKind::UnknownField);
  CHECK(kind_of([&] { (void)s.query_filtered(t, parse_predicate("a.f = b.f"), false); }) == ErrorKind::UnknownField);
  CHECK(s.query_filtered(t, parse_predicate("a.f = 1"), false).size() == 1);
  CHECK(s.query_filtered(t, parse_predicate("a.f = 1"), true).empty());
  CHECK(s.query_filtered({}, {}, false).empty());
  CHECK(kind_of([&] { (void)s.query_filtered({{"a", {"x"}}, {"a", {"y"}}}, {}, false); }) == ErrorKind::BadArgument);
}

TEST_CASE("property: query_filtered equals a brute-force join") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Rng rng(seed * 1000 + 7);
    const int threshold = static_cast<int>(uniform(rng, 1, 3));
    ConceptStore s(threshold);
    std::vector<Record> stored;
    std::map<std::pair<std::string, std::string>, int> hits;
    const auto pool = uniform(rng, 2, 200);
    const auto n_entries = uniform(rng, 1, 80);
    for (std::size_t e = 0; e < n_entries; ++e) {
      std::vector<Record> entry;
      std::set<std::string> seen;
      for (std::size_t k = uniform(rng, 1, 4); k > 0; --k) {
        const auto id = "r" + std::to_string(uniform(rng, 0, pool - 1));
        Record r = rec(id, {coin(rng) ? "left" : "right", coin(rng) ? "p" : "q"});
        for (int f = 0; f < 4; ++f) r.payload[kFields[f]] = random_literal(rng, f);
        if (std::none_of(stored.begin(), stored.end(), [&](const Record& x) { return x.record_id == id; })) {
          stored.push_back(r);
        }
        entry.push_back(r);
        seen.insert(id);
      }
      for (auto a = seen.begin(); a != seen.end(); ++a) {
        for (auto b = std::next(a); b != seen.end(); ++b) ++hits[{*a, *b}];
      }
      s.add_entry(entry);
    }
    REQUIRE(s.size() <= 200);

    for (int q = 0; q < 25; ++q) {
      std::vector<Target> targets = {{"u", {"left"}}, {"v", {}}};
      if (coin(rng)) targets[1].prefix = {"right", "q"};
      if (coin(rng, 0.3)) targets.push_back({"w", {"right"}});
      FilterPredicate pred;
      for (std::size_t a = uniform(rng, 0, 3); a > 0; --a) {
        const int f = static_cast<int>(uniform(rng, 0, 3));
        const auto& alias = targets[uniform(rng, 0, targets.size() - 1)].alias;
        pred.compares.push_back({{alias, kFields[f]}, static_cast<CompareOp>(uniform(rng, 0, 2)), random_literal(rng, f)});
      }
      if (coin(rng, 0.6)) {
        const int f = static_cast<int>(uniform(rng, 0, 3));
        pred.cross.push_back({{"u", kFields[f]}, {targets.back().alias, kFields[coin(rng, 0.8) ? f : (f + 3) % 4]}});
      }
      const bool reliable_only = coin(rng);

      std::vector<std::vector<const Record*>> cands;
      for (const auto& t : targets) {
        std::vector<const Record*> c;
        for (const auto& r : stored) {
          if (is_prefix(t.prefix, r.chain)) c.push_back(&r);
        }
        std::stable_sort(c.begin(), c.end(), [](const Record* a, const Record* b) { return a->chain < b->chain; });
        cands.push_back(c);
      }
      auto field = [&](const std::vector<const Record*>& tup, const FieldRef& f) {
        for (std::size_t i = 0; i < targets.size(); ++i) {
          if (targets[i].alias == f.alias) return tup[i]->payload.at(f.field);
        }
        throw std::logic_error("alias");
      };
      auto pair_hits = [&](const std::string& a, const std::string& b) {
        const auto it = hits.find(a < b ? std::pair(a, b) : std::pair(b, a));
        return it == hits.end() ? 0 : it->second;
      };
      std::vector<std::vector<std::string>> expect;
      std::vector<const Record*> tup(targets.size());
      std::function<void(std::size_t)> walk = [&](std::size_t d) {
        if (d == targets.size()) {
          for (const auto& a : pred.compares) {
            if (!compare(field(tup, a.lhs), a.op, a.rhs)) return;
          }
          for (const auto& a : pred.cross) {
            if (!compare(field(tup, a.lhs), CompareOp::Eq, field(tup, a.rhs))) return;
          }
          if (reliable_only) {
            for (std::size_t i = 0; i < tup.size(); ++i) {
              for (std::size_t j = i + 1; j < tup.size(); ++j) {
                if (tup[i]->record_id == tup[j]->record_id) return;
                if (pair_hits(tup[i]->record_id, tup[j]->record_id) < threshold) return;
              }
            }
          }
          std::vector<std::string> row;
          for (const auto* r : tup) row.push_back(r->record_id);
          expect.push_back(row);
          return;
        }
        for (const auto* r : cands[d]) {
          tup[d] = r;
          walk(d + 1);
        }
      };
      walk(0);

      std::vector<std::vector<std::string>> got;
      for (const auto& row : s.query_filtered(targets, pred, reliable_only)) got.push_back(ids_of(row));
      CHECK(got == expect);
    }
  }
}

TEST_CASE("JSON lines group by entry in order of first appearance") {
  std::istringstream in(
      "{\"entry\": \"e2\", \"id\": \"a\", \"chain\": [\"x\"], \"payload\": {\"d\": \"2009-12-01\", \"n\": 3, "
      "\"r\": 1.5}}\n"
      "\n"
      "{\"entry\": \"e1\", \"chain\": [\"y\", \"z\"], \"source\": \"<U>http://h:1</U><S>A</S>\"}\n"
      "{\"entry\": \"e2\", \"id\": \"b\", \"chain\": [\"x\"]}\n");
  const auto entries = load_jsonl(in);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].size() == 2);
  CHECK(entries[0][0].record_id == "a");
  CHECK(std::get<Date>(entries[0][0].payload.at("d")) == Date{2009, 12, 1});
  CHECK(std::get<std::int64_t>(entries[0][0].payload.at("n")) == 3);
  CHECK(std::get<double>(entries[0][0].payload.at("r")) == 1.5);
  CHECK(entries[1][0].record_id.empty());
  CHECK(entries[1][0].source == Handle{"http://h:1", {"A"}});

  for (const char* bad : {"{", "[1]", "{\"entry\": 1}", "{\"entry\": \"e\", \"chain\": [1]}",
                          "{\"entry\": \"e\", \"chain\": [\"a\"], \"payload\": {\"k\": [1]}}",
                          "{\"entry\": \"e\", \"chain\": [\"a\"], \"source\": \"junk\"}"}) {
    CAPTURE(bad);
    std::istringstream one(bad);
    CHECK(kind_of([&] { (void)load_jsonl(one); }) == ErrorKind::ParseError);
  }
}

TEST_CASE("travel fixture: filtered query matches the oracle with and without gating") {
  std::ifstream in(servnet::testgen::travel_fixture_path());
  REQUIRE(in.good());
  ConceptStore s(3);
  for (auto& e : load_jsonl(in)) s.add_entry(std::move(e));
  const servnet::testgen::TravelOracle oracle(servnet::testgen::travel_fixture_path());
  CHECK(s.size() == oracle.records.size());

  const std::vector<Target> targets = {{"h", {"hotel"}}, {"f", {"flight"}}, {"t", {"connection_transport"}}};
  const auto pred = parse_predicate(servnet::testgen::kTravelPredicate);
  for (bool gated : {false, true}) {
    std::set<std::vector<std::string>> got;
    const auto rows = s.query_filtered(targets, pred, gated);
    for (const auto& row : rows) got.insert(ids_of(row));
    CHECK(got.size() == rows.size());
    CHECK(got == oracle.answer(3, gated));
  }
  CHECK(oracle.answer(3, true) == std::set<std::vector<std::string>>{{"hotel-A", "flight-A", "conn-A"}});
  CHECK(oracle.answer(3, false).size() == 8);
  // Entered together twice: below the threshold.
  CHECK(s.hits("hotel-B", "flight-A") == 2);
  CHECK_FALSE(s.is_reliable("hotel-B", "flight-A"));
  // Reinforced but filtered out by cost.
  CHECK(s.is_reliable("hotel-C", "flight-A"));
  CHECK(s.query_chain({"conference"}).size() == 1);
}
