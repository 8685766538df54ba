#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "servnet/service.hpp"

// Leveled password groups over a service's methods.
//
// A password opens its own group, plus every group at a strictly lower
// level that its group does not exclude. Groups on the same level never
// open each other.
namespace servnet::access {

struct AccessGroup {
  std::string id;
  int level = 0;
  std::string password_hash;  // hex SHA-256 of the password
  std::set<std::string> excluded;

  bool operator==(const AccessGroup&) const = default;
};

struct AccessConfig {
  std::vector<AccessGroup> groups;
  std::map<std::string, std::string> method_group;

  const AccessGroup* group(std::string_view id) const noexcept;
  bool operator==(const AccessConfig&) const = default;
};

enum class Decision { Grant, Deny };

std::string hash_password(std::string_view password);

/// Throws Error(InvalidConfig): duplicate or unknown group ids, negative
/// levels, self-exclusion, methods mapped to unknown groups.
void validate(const AccessConfig& cfg);

/// Throws Error(UncoveredMethod) when a method of the table has no group and
/// Error(InvalidConfig) when the config names a method the table lacks.
void check_covers(const AccessConfig& cfg, const MethodTable& methods);

/// Whether a holder of `holder`'s password may use methods of `target`.
bool opens(const AccessGroup& holder, const AccessGroup& target) noexcept;

/// Throws Error(UnknownMethod) when the method has no group.
Decision authorize(const AccessConfig& cfg, std::string_view method, std::string_view presented);

/// Groups whose methods authorize() grants for this password.
std::set<std::string> effective_levels(const AccessConfig& cfg, std::string_view presented);

}  // namespace servnet::access
