#include "servnet/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "servnet/error.hpp"

namespace servnet {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

long long to_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const auto n = std::stoll(value, &used);
    if (used == value.size()) return n;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::InvalidConfig, "config: '" + key + "' expects an integer, got '" + value + "'");
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  fail(ErrorKind::InvalidConfig, "config: '" + key + "' expects a boolean, got '" + value + "'");
}

}  // namespace

NodeConfig parse_config(std::string_view text) {
  NodeConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::InvalidConfig, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(std::string_view(stripped).substr(0, eq));
    auto value = trim(std::string_view(stripped).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);

    if (key == "listen") {
      const auto colon = value.rfind(':');
      if (colon == std::string::npos) fail(ErrorKind::InvalidConfig, "config: listen expects host:port");
      cfg.listen_host = value.substr(0, colon);
      cfg.listen_port = static_cast<int>(to_number(key, value.substr(colon + 1)));
    } else if (key == "base_uri") {
      cfg.base_uri = value;
    } else if (key == "packet_size") {
      const auto n = to_number(key, value);
      if (n < 1) fail(ErrorKind::InvalidConfig, "config: packet_size must be at least 1");
      cfg.packet_size = static_cast<std::size_t>(n);
    } else if (key == "reassembly_timeout_ms") {
      cfg.reassembly_timeout = std::chrono::milliseconds(to_number(key, value));
    } else if (key == "admin_enabled") {
      cfg.admin_enabled = to_bool(key, value);
    } else if (key == "admin_token") {
      cfg.admin_token = value;
    } else if (key.starts_with("kind.")) {
      cfg.kind_aliases[key.substr(5)] = value;
    } else {
      fail(ErrorKind::InvalidConfig, "config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

NodeConfig load_config(const std::string& path) {
  std::string chosen = path;
  if (const char* env = std::getenv("SERVNET_CONFIG"); env && *env) chosen = env;
  std::ifstream in(chosen);
  if (!in) fail(ErrorKind::InvalidConfig, "cannot read config file '" + chosen + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace servnet
