#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Minimal XML document model used by every servnet codec. Supports elements,
// attributes, text (with entity and character references), CDATA and
// comments. No namespaces processing, no DTDs.
namespace servnet::xml {

struct Element {
  std::string name;  // empty for text nodes
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;  // payload of a text node

  Element() = default;
  explicit Element(std::string element_name) : name(std::move(element_name)) {}

  static Element make_text(std::string value);
  /// Element holding a single text child (or no child for empty text).
  static Element leaf(std::string element_name, std::string_view value);

  bool is_text() const noexcept { return name.empty(); }

  /// Concatenation of the direct text children.
  std::string text_content() const;
  std::vector<const Element*> elements() const;
  const Element* child(std::string_view child_name) const;
  std::optional<std::string> attribute(std::string_view attr) const;

  Element& add(Element child);
  Element& add_leaf(std::string element_name, std::string_view value);
  Element& set_attribute(std::string attr, std::string value);

  bool operator==(const Element&) const = default;
};

std::string escape_text(std::string_view raw);
std::string escape_attribute(std::string_view raw);

/// Compact serialization, no whitespace between elements.
std::string serialize(const Element& element);
void serialize_to(std::string& out, const Element& element);
std::string serialize_fragment(const std::vector<Element>& nodes);

/// Parses a document with a single root element. Throws Error(ParseError).
Element parse(std::string_view document);
/// Parses mixed content (text and any number of elements).
std::vector<Element> parse_fragment(std::string_view fragment);

}  // namespace servnet::xml
