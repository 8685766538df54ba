#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "servnet/xml.hpp"

namespace servnet {

/// Address of a service: the hosting node's base URI plus the chain of
/// service names from the network root, outermost first. A handle with an
/// empty path addresses the network root itself (only valid as a parent).
struct Handle {
  std::string base_uri;
  std::vector<std::string> path;

  Handle() = default;
  Handle(std::string uri, std::vector<std::string> names)
      : base_uri(std::move(uri)), path(std::move(names)) {}

  bool is_root() const noexcept { return path.empty(); }
  Handle child(std::string name) const;
  Handle parent() const;
  /// Service names joined with '/', e.g. "Service1/Service2".
  std::string path_string() const;

  auto operator<=>(const Handle&) const = default;
  bool operator==(const Handle&) const = default;
};

/// `<U>base</U><S>name</S>...`, no whitespace between elements.
std::string to_wire(const Handle& h);
/// Inverse of to_wire. Throws Error(ParseError).
Handle parse_handle(std::string_view wire);

/// Appends the U/S children of a handle to an XML element.
void append_handle(xml::Element& parent, const Handle& h);
/// Reads a handle from an element whose children are U followed by S*.
/// Throws Error(ParseError).
Handle handle_from_element(const xml::Element& element);

/// Service names may not be empty or contain '<', '>' or '/'.
bool is_valid_service_name(std::string_view name) noexcept;
/// Absolute URI with an authority component ("scheme://authority[/path]").
bool is_valid_base_uri(std::string_view uri);
/// Any syntactically valid absolute URI ("scheme:rest", no whitespace).
bool is_valid_uri(std::string_view uri);
/// Splits "a/b/c" into names; empty string yields an empty path.
std::vector<std::string> split_path(std::string_view path);

}  // namespace servnet
