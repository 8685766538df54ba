#include "servnet/xml.hpp"

#include <charconv>

#include "servnet/error.hpp"

namespace servnet::xml {

Element Element::make_text(std::string value) {
  Element e;
  e.text = std::move(value);
  return e;
}

Element Element::leaf(std::string element_name, std::string_view value) {
  Element e(std::move(element_name));
  if (!value.empty()) e.children.push_back(make_text(std::string(value)));
  return e;
}

std::string Element::text_content() const {
  std::string out;
  for (const auto& c : children) {
    if (c.is_text()) out += c.text;
  }
  return out;
}

std::vector<const Element*> Element::elements() const {
  std::vector<const Element*> out;
  for (const auto& c : children) {
    if (!c.is_text()) out.push_back(&c);
  }
  return out;
}

const Element* Element::child(std::string_view child_name) const {
  for (const auto& c : children) {
    if (!c.is_text() && c.name == child_name) return &c;
  }
  return nullptr;
}

std::optional<std::string> Element::attribute(std::string_view attr) const {
  for (const auto& [k, v] : attributes) {
    if (k == attr) return v;
  }
  return std::nullopt;
}

Element& Element::add(Element child) {
  children.push_back(std::move(child));
  return children.back();
}

Element& Element::add_leaf(std::string element_name, std::string_view value) {
  return add(leaf(std::move(element_name), value));
}

Element& Element::set_attribute(std::string attr, std::string value) {
  for (auto& [k, v] : attributes) {
    if (k == attr) {
      v = std::move(value);
      return *this;
    }
  }
  attributes.emplace_back(std::move(attr), std::move(value));
  return *this;
}

namespace {

void append_char_ref(std::string& out, unsigned char c) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  out += "&#x";
  out += kHex[c >> 4];
  out += kHex[c & 0xF];
  out += ';';
}

void escape_into(std::string& out, std::string_view raw, bool attribute) {
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) out += "&quot;";
        else out += ch;
        break;
      default:
        // Control characters (and CR, which parsers normalise) travel as
        // character references so strings survive byte-exact.
        if (c < 0x20 && (attribute || (c != '\n' && c != '\t'))) {
          append_char_ref(out, c);
        } else {
          out += ch;
        }
    }
  }
}

}  // namespace

std::string escape_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  escape_into(out, raw, false);
  return out;
}

std::string escape_attribute(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  escape_into(out, raw, true);
  return out;
}

void serialize_to(std::string& out, const Element& element) {
  if (element.is_text()) {
    escape_into(out, element.text, false);
    return;
  }
  out += '<';
  out += element.name;
  for (const auto& [k, v] : element.attributes) {
    out += ' ';
    out += k;
    out += "=\"";
    escape_into(out, v, true);
    out += '"';
  }
  if (element.children.empty()) {
    out += "/>";
    return;
  }
  out += '>';
  for (const auto& c : element.children) serialize_to(out, c);
  out += "</";
  out += element.name;
  out += '>';
}

std::string serialize(const Element& element) {
  std::string out;
  serialize_to(out, element);
  return out;
}

std::string serialize_fragment(const std::vector<Element>& nodes) {
  std::string out;
  for (const auto& n : nodes) serialize_to(out, n);
  return out;
}

namespace {

constexpr int kMaxDepth = 256;

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Element parse_document() {
    skip_misc();
    if (starts_with("<?xml")) {
      const auto end = src_.find("?>", pos_);
      if (end == std::string_view::npos) error("unterminated XML declaration");
      pos_ = end + 2;
    }
    skip_misc();
    if (!starts_with("<")) error("expected root element");
    Element root = parse_element(0);
    skip_misc();
    if (pos_ != src_.size()) error("trailing content after root element");
    return root;
  }

  std::vector<Element> parse_mixed() {
    std::vector<Element> nodes;
    parse_content(nodes, 0, /*fragment=*/true);
    if (pos_ != src_.size()) error("unexpected closing tag in fragment");
    drop_whitespace_text(nodes);
    return nodes;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::ParseError, "xml: " + what + " at offset " + std::to_string(pos_));
  }

  bool starts_with(std::string_view s) const { return src_.substr(pos_).starts_with(s); }
  bool at_end() const { return pos_ >= src_.size(); }

  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
  static bool is_name_start(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || c == ':' ||
           static_cast<unsigned char>(c) >= 0x80;
  }
  static bool is_name_char(char c) {
    return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
  }

  void skip_space() {
    while (!at_end() && is_space(src_[pos_])) ++pos_;
  }

  void skip_comment() {
    const auto end = src_.find("-->", pos_ + 4);
    if (end == std::string_view::npos) error("unterminated comment");
    pos_ = end + 3;
  }

  void skip_misc() {
    for (;;) {
      skip_space();
      if (starts_with("<!--")) {
        skip_comment();
      } else if (starts_with("<?") && !starts_with("<?xml")) {
        const auto end = src_.find("?>", pos_);
        if (end == std::string_view::npos) error("unterminated processing instruction");
        pos_ = end + 2;
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    const auto start = pos_;
    if (at_end() || !is_name_start(src_[pos_])) error("expected name");
    while (!at_end() && is_name_char(src_[pos_])) ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  void append_codepoint(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x110000) {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      error("character reference out of range");
    }
  }

  void parse_reference(std::string& out) {
    const auto end = src_.find(';', pos_);
    if (end == std::string_view::npos || end - pos_ > 12) error("bad entity reference");
    const auto ref = src_.substr(pos_ + 1, end - pos_ - 1);
    if (ref == "lt") out += '<';
    else if (ref == "gt") out += '>';
    else if (ref == "amp") out += '&';
    else if (ref == "quot") out += '"';
    else if (ref == "apos") out += '\'';
    else if (ref.size() > 1 && ref[0] == '#') {
      int base = 10;
      auto digits = ref.substr(1);
      if (digits[0] == 'x' || digits[0] == 'X') {
        base = 16;
        digits = digits.substr(1);
      }
      unsigned long cp = 0;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, base);
      if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
        error("bad character reference");
      }
      append_codepoint(out, cp);
    } else {
      error("unknown entity &" + std::string(ref) + ";");
    }
    pos_ = end + 1;
  }

  std::string parse_attribute_value() {
    if (at_end() || (src_[pos_] != '"' && src_[pos_] != '\'')) error("expected quoted attribute");
    const char quote = src_[pos_++];
    std::string value;
    while (!at_end() && src_[pos_] != quote) {
      if (src_[pos_] == '&') {
        parse_reference(value);
      } else if (src_[pos_] == '<') {
        error("'<' in attribute value");
      } else {
        value += src_[pos_++];
      }
    }
    if (at_end()) error("unterminated attribute value");
    ++pos_;
    return value;
  }

  static void drop_whitespace_text(std::vector<Element>& nodes) {
    bool has_element = false;
    for (const auto& n : nodes) has_element = has_element || !n.is_text();
    if (!has_element) return;
    std::erase_if(nodes, [](const Element& n) {
      return n.is_text() && n.text.find_first_not_of(" \t\r\n") == std::string::npos;
    });
  }

  void push_text(std::vector<Element>& nodes, std::string&& text) {
    if (text.empty()) return;
    if (!nodes.empty() && nodes.back().is_text()) {
      nodes.back().text += text;
    } else {
      nodes.push_back(Element::make_text(std::move(text)));
    }
  }

  // Parses children until a closing tag (left unconsumed) or end of input.
  void parse_content(std::vector<Element>& nodes, int depth, bool fragment) {
    std::string text;
    while (!at_end()) {
      const char c = src_[pos_];
      if (c == '<') {
        if (starts_with("</")) break;
        push_text(nodes, std::move(text));
        text.clear();
        if (starts_with("<!--")) {
          skip_comment();
        } else if (starts_with("<![CDATA[")) {
          const auto end = src_.find("]]>", pos_);
          if (end == std::string_view::npos) error("unterminated CDATA");
          push_text(nodes, std::string(src_.substr(pos_ + 9, end - pos_ - 9)));
          pos_ = end + 3;
        } else {
          nodes.push_back(parse_element(depth + 1));
        }
      } else if (c == '&') {
        parse_reference(text);
      } else {
        text += c;
        ++pos_;
      }
    }
    if (at_end() && !fragment) error("unexpected end of input");
    push_text(nodes, std::move(text));
  }

  Element parse_element(int depth) {
    if (depth > kMaxDepth) error("nesting too deep");
    ++pos_;  // '<'
    Element element(parse_name());
    for (;;) {
      const bool had_space = !at_end() && is_space(src_[pos_]);
      skip_space();
      if (at_end()) error("unterminated start tag");
      if (starts_with("/>")) {
        pos_ += 2;
        return element;
      }
      if (src_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (!had_space) error("expected whitespace before attribute");
      std::string key = parse_name();
      skip_space();
      if (at_end() || src_[pos_] != '=') error("expected '='");
      ++pos_;
      skip_space();
      if (element.attribute(key)) error("duplicate attribute " + key);
      element.attributes.emplace_back(std::move(key), parse_attribute_value());
    }
    parse_content(element.children, depth, false);
    pos_ += 2;  // "</"
    const auto close = parse_name();
    if (close != element.name) error("mismatched closing tag </" + close + "> for <" + element.name + ">");
    skip_space();
    if (at_end() || src_[pos_] != '>') error("expected '>'");
    ++pos_;
    drop_whitespace_text(element.children);
    return element;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

Element parse(std::string_view document) { return Parser(document).parse_document(); }

std::vector<Element> parse_fragment(std::string_view fragment) {
  return Parser(fragment).parse_mixed();
}

}  // namespace servnet::xml
