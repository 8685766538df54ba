#pragma once

// Brute-force reference implementations shared by unit and acceptance tests.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "servnet/access.hpp"
#include "support/generators.hpp"

namespace servnet::testgen {

inline access::AccessGroup group(std::string id, int level, std::string_view password, std::set<std::string> excluded = {}) {
  return access::AccessGroup{std::move(id), level, access::hash_password(password), std::move(excluded)};
}

// Literal reading of the grant rule: some group holding the password either
// is the method's group or sits strictly above it without excluding it.
inline bool oracle_grant(const access::AccessConfig& cfg, const std::map<std::string, std::string>& passwords,
                  const std::string& method, const std::string& presented) {
  const auto& target_id = cfg.method_group.at(method);
  int target_level = -1;
  for (const auto& g : cfg.groups) {
    if (g.id == target_id) target_level = g.level;
  }
  for (const auto& g : cfg.groups) {
    if (passwords.at(g.id) != presented) continue;
    if (g.id == target_id) return true;
    if (g.level > target_level && g.excluded.count(target_id) == 0) return true;
  }
  return false;
}

struct RandomConfig {
  access::AccessConfig cfg;
  std::map<std::string, std::string> passwords;
};

inline RandomConfig random_config(Rng& rng) {
  RandomConfig out;
  const auto n = uniform(rng, 1, 6);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = "g" + std::to_string(i);
    // Small password pool so some groups share passwords.
    const auto pw = "pw" + std::to_string(uniform(rng, 0, n));
    out.passwords[id] = pw;
    out.cfg.groups.push_back(group(id, static_cast<int>(uniform(rng, 0, 3)), pw));
  }
  for (auto& g : out.cfg.groups) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto other = "g" + std::to_string(j);
      if (other != g.id && coin(rng, 0.25)) g.excluded.insert(other);
    }
  }
  const auto methods = uniform(rng, 1, 8);
  for (std::size_t m = 0; m < methods; ++m) {
    out.cfg.method_group["m" + std::to_string(m)] = "g" + std::to_string(uniform(rng, 0, n - 1));
  }
  return out;
}

// Brute-force argmax graph: each ID links to the most similar other ID,
// ties going to the lexicographically smallest ID, then the smallest name.
inline std::map<std::string, std::vector<std::string>> argmax_oracle(const std::map<std::string, std::string>& ids) {
  auto similarity = [](const std::string& a, const std::string& b) {
    const auto n = std::max(a.size(), b.size());
    int same = 0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) same += a[i] == b[i] ? 1 : 0;
    return n == 0 ? 1.0 : static_cast<double>(same) / static_cast<double>(n);
  };
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [name, id] : ids) {
    std::string pick;
    double best = -1.0;
    for (const auto& [other, oid] : ids) {
      if (other == name) continue;
      const double s = similarity(id, oid);
      if (s > best || (s == best && std::pair(oid, other) < std::pair(ids.at(pick), pick))) {
        best = s;
        pick = other;
      }
    }
    out[name] = {pick};
  }
  return out;
}

}  // namespace servnet::testgen
