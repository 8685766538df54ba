#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace servnet {

struct NodeConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8888;  // 0 picks a free port
  std::string base_uri;    // derived from the bound address when empty
  std::size_t packet_size = 4096;
  std::chrono::milliseconds reassembly_timeout{30'000};
  bool admin_enabled = true;
  std::string admin_token;  // empty: admin API is unauthenticated
  std::map<std::string, std::string> kind_aliases;  // name -> Class_Name
};

/// Parses `key = value` lines; '#' starts a comment. Keys: listen
/// (host:port), base_uri, packet_size, reassembly_timeout_ms,
/// admin_enabled, admin_token, kind.<Name>. Throws Error(InvalidConfig).
NodeConfig parse_config(std::string_view text);

/// Reads the file named by SERVNET_CONFIG when set, otherwise `path`.
NodeConfig load_config(const std::string& path);

}  // namespace servnet
