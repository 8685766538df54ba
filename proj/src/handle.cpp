#include "servnet/handle.hpp"

#include <regex>

#include "servnet/error.hpp"

namespace servnet {

Handle Handle::child(std::string name) const {
  Handle h = *this;
  h.path.push_back(std::move(name));
  return h;
}

Handle Handle::parent() const {
  Handle h = *this;
  if (!h.path.empty()) h.path.pop_back();
  return h;
}

std::string Handle::path_string() const {
  std::string out;
  for (const auto& name : path) {
    if (!out.empty()) out += '/';
    out += name;
  }
  return out;
}

bool is_valid_service_name(std::string_view name) noexcept {
  return !name.empty() && name.find_first_of("<>/") == std::string_view::npos;
}

bool is_valid_base_uri(std::string_view uri) {
  static const std::regex re(R"(^[A-Za-z][A-Za-z0-9+.\-]*://[^/\s?#<>"]+(/[^\s<>"]*)?$)");
  return std::regex_match(uri.begin(), uri.end(), re);
}

bool is_valid_uri(std::string_view uri) {
  static const std::regex re(R"(^[A-Za-z][A-Za-z0-9+.\-]*:[^\s<>"]+$)");
  return std::regex_match(uri.begin(), uri.end(), re);
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  while (!path.empty()) {
    const auto slash = path.find('/');
    const auto part = path.substr(0, slash);
    if (!part.empty()) out.emplace_back(part);
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  return out;
}

std::string to_wire(const Handle& h) {
  std::string out = "<U>" + xml::escape_text(h.base_uri) + "</U>";
  for (const auto& name : h.path) {
    out += "<S>";
    out += xml::escape_text(name);
    out += "</S>";
  }
  return out;
}

void append_handle(xml::Element& parent, const Handle& h) {
  parent.add_leaf("U", h.base_uri);
  for (const auto& name : h.path) parent.add_leaf("S", name);
}

Handle handle_from_element(const xml::Element& element) {
  Handle h;
  bool seen_uri = false;
  for (const auto& c : element.children) {
    if (c.is_text()) fail(ErrorKind::ParseError, "handle: stray text");
    if (!c.attributes.empty() || !c.elements().empty()) {
      fail(ErrorKind::ParseError, "handle: <" + c.name + "> must hold text only");
    }
    if (c.name == "U") {
      if (seen_uri) fail(ErrorKind::ParseError, "handle: more than one <U>");
      seen_uri = true;
      h.base_uri = c.text_content();
      if (!is_valid_base_uri(h.base_uri)) fail(ErrorKind::ParseError, "handle: bad base URI '" + h.base_uri + "'");
    } else if (c.name == "S") {
      if (!seen_uri) fail(ErrorKind::ParseError, "handle: <S> before <U>");
      auto name = c.text_content();
      if (!is_valid_service_name(name)) fail(ErrorKind::ParseError, "handle: bad service name '" + name + "'");
      h.path.push_back(std::move(name));
    } else {
      fail(ErrorKind::ParseError, "handle: unexpected element <" + c.name + ">");
    }
  }
  if (!seen_uri) fail(ErrorKind::ParseError, "handle: missing <U>");
  return h;
}

Handle parse_handle(std::string_view wire) {
  std::string doc;
  doc.reserve(wire.size() + 7);
  doc += "<H>";
  doc += wire;
  doc += "</H>";
  return handle_from_element(xml::parse(doc));
}

}  // namespace servnet
