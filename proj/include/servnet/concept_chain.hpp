#pragma once

#include <string>
#include <vector>

namespace servnet {

/// Ordered list of concepts, base concept first.
using ConceptChain = std::vector<std::string>;

/// Co-occurrence count at which a temporary link becomes retrievable.
inline constexpr int kDefaultReliabilityThreshold = 3;

inline bool is_prefix(const ConceptChain& prefix, const ConceptChain& chain) noexcept {
  if (prefix.size() > chain.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (prefix[i] != chain[i]) return false;
  }
  return true;
}

std::string chain_to_string(const ConceptChain& chain);

}  // namespace servnet
