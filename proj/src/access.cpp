#include "servnet/access.hpp"

#include "servnet/codec_util.hpp"
#include "servnet/error.hpp"

namespace servnet::access {

const AccessGroup* AccessConfig::group(std::string_view id) const noexcept {
  for (const auto& g : groups) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

std::string hash_password(std::string_view password) { return codec::sha256_hex(password); }

void validate(const AccessConfig& cfg) {
  std::set<std::string> ids;
  for (const auto& g : cfg.groups) {
    if (g.id.empty()) fail(ErrorKind::InvalidConfig, "access group with empty id");
    if (!ids.insert(g.id).second) fail(ErrorKind::InvalidConfig, "duplicate access group '" + g.id + "'");
    if (g.level < 0) fail(ErrorKind::InvalidConfig, "group '" + g.id + "' has a negative level");
  }
  for (const auto& g : cfg.groups) {
    for (const auto& ex : g.excluded) {
      if (ex == g.id) fail(ErrorKind::InvalidConfig, "group '" + g.id + "' excludes itself");
      if (!ids.contains(ex)) {
        fail(ErrorKind::InvalidConfig, "group '" + g.id + "' excludes unknown group '" + ex + "'");
      }
    }
  }
  for (const auto& [method, gid] : cfg.method_group) {
    if (!ids.contains(gid)) {
      fail(ErrorKind::InvalidConfig, "method '" + method + "' mapped to unknown group '" + gid + "'");
    }
  }
}

void check_covers(const AccessConfig& cfg, const MethodTable& methods) {
  for (const auto& [name, descriptor] : methods) {
    if (!cfg.method_group.contains(name)) {
      fail(ErrorKind::UncoveredMethod, "method '" + name + "' has no access group");
    }
  }
  for (const auto& [name, gid] : cfg.method_group) {
    if (!methods.contains(name)) {
      fail(ErrorKind::InvalidConfig, "access config names unknown method '" + name + "'");
    }
  }
}

bool opens(const AccessGroup& holder, const AccessGroup& target) noexcept {
  if (holder.id == target.id) return true;
  return holder.level > target.level && !holder.excluded.contains(target.id);
}

namespace {

std::vector<const AccessGroup*> matching_groups(const AccessConfig& cfg, std::string_view presented) {
  const auto hashed = hash_password(presented);
  std::vector<const AccessGroup*> out;
  // Every group is compared so timing does not reveal which one matched.
  for (const auto& g : cfg.groups) {
    if (codec::constant_time_equal(hashed, g.password_hash)) out.push_back(&g);
  }
  return out;
}

}  // namespace

Decision authorize(const AccessConfig& cfg, std::string_view method, std::string_view presented) {
  const auto it = cfg.method_group.find(std::string(method));
  if (it == cfg.method_group.end()) {
    fail(ErrorKind::UnknownMethod, "method '" + std::string(method) + "' has no access group");
  }
  const auto* target = cfg.group(it->second);
  if (!target) fail(ErrorKind::InvalidConfig, "method mapped to unknown group '" + it->second + "'");
  for (const auto* holder : matching_groups(cfg, presented)) {
    if (opens(*holder, *target)) return Decision::Grant;
  }
  return Decision::Deny;
}

std::set<std::string> effective_levels(const AccessConfig& cfg, std::string_view presented) {
  std::set<std::string> out;
  for (const auto* holder : matching_groups(cfg, presented)) {
    for (const auto& target : cfg.groups) {
      if (opens(*holder, target)) out.insert(target.id);
    }
  }
  return out;
}

}  // namespace servnet::access
