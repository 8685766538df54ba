#include "servnet/wire.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

#include "servnet/codec_util.hpp"

namespace servnet::wire {
namespace {

[[noreturn]] void decode_error(const std::string& what) {
  fail(ErrorKind::DecodeError, "wire: " + what);
}

void check_structured(const Value& v) {
  switch (v.type()) {
    case Value::Type::Blob:
      fail(ErrorKind::UnsupportedType, "blob values need the opaque encoding");
    case Value::Type::Float:
      if (!std::isfinite(v.as_number())) {
        fail(ErrorKind::UnsupportedType, "non-finite floats need the opaque encoding");
      }
      break;
    case Value::Type::List:
      for (const auto& item : v.as_list()) check_structured(item);
      break;
    case Value::Type::Map:
      for (const auto& [k, item] : v.as_map()) check_structured(item);
      break;
    default:
      break;
  }
}

std::string format_double(double d) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, ptr);
}

xml::Element structured_to_xml(const Value& v) {
  switch (v.type()) {
    case Value::Type::Nil: return xml::Element("n");
    case Value::Type::Bool: return xml::Element::leaf("b", v.as_bool() ? "true" : "false");
    case Value::Type::Int: return xml::Element::leaf("i", std::to_string(v.as_int()));
    case Value::Type::Float: return xml::Element::leaf("d", format_double(v.as_number()));
    case Value::Type::String: return xml::Element::leaf("s", v.as_string());
    case Value::Type::List: {
      xml::Element e("l");
      for (const auto& item : v.as_list()) e.add(structured_to_xml(item));
      return e;
    }
    case Value::Type::Map: {
      xml::Element e("m");
      for (const auto& [k, item] : v.as_map()) {
        auto& entry = e.add(xml::Element("e"));
        entry.set_attribute("k", k);
        entry.add(structured_to_xml(item));
      }
      return e;
    }
    case Value::Type::Blob: break;
  }
  fail(ErrorKind::UnsupportedType, "blob values need the opaque encoding");
}

void expect_no_attributes(const xml::Element& e) {
  if (!e.attributes.empty()) decode_error("unexpected attribute on <" + e.name + ">");
}

std::string leaf_text(const xml::Element& e) {
  expect_no_attributes(e);
  if (!e.elements().empty()) decode_error("<" + e.name + "> must hold text only");
  return e.text_content();
}

void expect_element_content(const xml::Element& e) {
  for (const auto& c : e.children) {
    if (c.is_text()) decode_error("stray text inside <" + e.name + ">");
  }
}

Value structured_from_xml(const xml::Element& e) {
  if (e.name == "n") {
    expect_no_attributes(e);
    if (!e.children.empty()) decode_error("<n> must be empty");
    return {};
  }
  if (e.name == "b") {
    const auto t = leaf_text(e);
    if (t == "true") return true;
    if (t == "false") return false;
    decode_error("bad boolean '" + t + "'");
  }
  if (e.name == "i") {
    const auto t = leaf_text(e);
    std::int64_t i = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), i);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) decode_error("bad integer '" + t + "'");
    return i;
  }
  if (e.name == "d") {
    const auto t = leaf_text(e);
    double d = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), d);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty() || !std::isfinite(d)) {
      decode_error("bad float '" + t + "'");
    }
    return d;
  }
  if (e.name == "s") return leaf_text(e);
  if (e.name == "l") {
    expect_no_attributes(e);
    expect_element_content(e);
    Value::List items;
    for (const auto* c : e.elements()) items.push_back(structured_from_xml(*c));
    return items;
  }
  if (e.name == "m") {
    expect_no_attributes(e);
    expect_element_content(e);
    Value::Map entries;
    for (const auto* c : e.elements()) {
      if (c->name != "e") decode_error("map entries must be <e>");
      const auto key = c->attribute("k");
      if (!key || c->attributes.size() != 1) decode_error("<e> needs exactly a k attribute");
      expect_element_content(*c);
      const auto items = c->elements();
      if (items.size() != 1) decode_error("<e> must hold exactly one value");
      if (!entries.emplace(*key, structured_from_xml(*items[0])).second) {
        decode_error("duplicate map key '" + *key + "'");
      }
    }
    return entries;
  }
  decode_error("unknown value element <" + e.name + ">");
}

// Opaque binary form: version byte, then a tagged tree.
void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out += static_cast<char>((v >> shift) & 0xFF);
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out += static_cast<char>((v >> shift) & 0xFF);
}

void put_bytes(std::string& out, std::string_view bytes) {
  put_u32(out, static_cast<std::uint32_t>(bytes.size()));
  out += bytes;
}

void serialize_value(std::string& out, const Value& v) {
  switch (v.type()) {
    case Value::Type::Nil: out += 'N'; break;
    case Value::Type::Bool: out += v.as_bool() ? 'T' : 'F'; break;
    case Value::Type::Int:
      out += 'I';
      put_u64(out, static_cast<std::uint64_t>(v.as_int()));
      break;
    case Value::Type::Float: {
      out += 'D';
      const double d = v.as_number();
      std::uint64_t bits = 0;
      std::memcpy(&bits, &d, sizeof bits);
      put_u64(out, bits);
      break;
    }
    case Value::Type::String:
      out += 'S';
      put_bytes(out, v.as_string());
      break;
    case Value::Type::Blob:
      out += 'B';
      put_bytes(out, v.as_blob().bytes);
      break;
    case Value::Type::List:
      out += 'L';
      put_u32(out, static_cast<std::uint32_t>(v.as_list().size()));
      for (const auto& item : v.as_list()) serialize_value(out, item);
      break;
    case Value::Type::Map:
      out += 'M';
      put_u32(out, static_cast<std::uint32_t>(v.as_map().size()));
      for (const auto& [k, item] : v.as_map()) {
        put_bytes(out, k);
        serialize_value(out, item);
      }
      break;
  }
}

class OpaqueReader {
 public:
  explicit OpaqueReader(std::string_view bytes) : bytes_(bytes) {}

  Value read(int depth) {
    if (depth > 256) decode_error("opaque value nested too deep");
    const char tag = take(1)[0];
    switch (tag) {
      case 'N': return {};
      case 'T': return true;
      case 'F': return false;
      case 'I': return static_cast<std::int64_t>(u64());
      case 'D': {
        const auto bits = u64();
        double d = 0;
        std::memcpy(&d, &bits, sizeof d);
        return d;
      }
      case 'S': return std::string(take(u32()));
      case 'B': return Blob{std::string(take(u32()))};
      case 'L': {
        const auto n = u32();
        Value::List items;
        for (std::uint32_t i = 0; i < n; ++i) items.push_back(read(depth + 1));
        return items;
      }
      case 'M': {
        const auto n = u32();
        Value::Map entries;
        for (std::uint32_t i = 0; i < n; ++i) {
          std::string key(take(u32()));
          if (!entries.emplace(std::move(key), read(depth + 1)).second) decode_error("duplicate opaque map key");
        }
        return entries;
      }
      default:
        decode_error("unknown opaque tag");
    }
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) decode_error("truncated opaque value");
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (char c : take(4)) v = (v << 8) | static_cast<unsigned char>(c);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (char c : take(8)) v = (v << 8) | static_cast<unsigned char>(c);
    return v;
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

const xml::Element& only_child(const xml::Element& e) {
  expect_no_attributes(e);
  expect_element_content(e);
  const auto items = e.elements();
  if (items.size() != 1) decode_error("<" + e.name + "> must hold exactly one element");
  return *items[0];
}

Handle decode_handle(const xml::Element& e) {
  expect_no_attributes(e);
  try {
    return handle_from_element(e);
  } catch (const Error& err) {
    decode_error(err.what());
  }
}

xml::Element parse_document(std::string_view bytes) {
  try {
    return xml::parse(bytes);
  } catch (const Error& err) {
    decode_error(err.what());
  }
}

}  // namespace

ParamValue encode_param(Value value, Encoding mode) {
  if (mode == Encoding::Structured) check_structured(value);
  return ParamValue{mode, std::move(value)};
}

ParamValue encode_param_auto(Value value) {
  try {
    check_structured(value);
  } catch (const Error&) {
    return ParamValue{Encoding::Opaque, std::move(value)};
  }
  return ParamValue{Encoding::Structured, std::move(value)};
}

std::string serialize_opaque(const Value& value) {
  std::string out;
  out += static_cast<char>(kOpaqueFormatVersion);
  serialize_value(out, value);
  return out;
}

Value deserialize_opaque(std::string_view bytes) {
  if (bytes.empty()) decode_error("empty opaque payload");
  if (static_cast<unsigned char>(bytes[0]) != kOpaqueFormatVersion) {
    decode_error("unsupported opaque format version " + std::to_string(static_cast<unsigned char>(bytes[0])));
  }
  OpaqueReader reader(bytes.substr(1));
  Value v = reader.read(0);
  if (!reader.done()) decode_error("trailing bytes after opaque value");
  return v;
}

xml::Element param_to_xml(const ParamValue& p) {
  if (p.encoding == Encoding::Structured) {
    check_structured(p.value);
    return structured_to_xml(p.value);
  }
  const auto bytes = serialize_opaque(p.value);
  auto e = xml::Element::leaf("o", codec::base64_encode(bytes));
  e.set_attribute("len", std::to_string(bytes.size()));
  return e;
}

ParamValue param_from_xml(const xml::Element& element) {
  if (element.name != "o") return ParamValue{Encoding::Structured, structured_from_xml(element)};
  const auto len = element.attribute("len");
  if (!len || element.attributes.size() != 1) decode_error("<o> needs exactly a len attribute");
  if (!element.elements().empty()) decode_error("<o> must hold text only");
  std::size_t expected = 0;
  const auto [ptr, ec] = std::from_chars(len->data(), len->data() + len->size(), expected);
  if (ec != std::errc{} || ptr != len->data() + len->size()) decode_error("bad len attribute");
  const auto bytes = codec::base64_decode(element.text_content());
  if (bytes.size() != expected) decode_error("opaque length mismatch");
  return ParamValue{Encoding::Opaque, deserialize_opaque(bytes)};
}

std::string encode_param_bytes(const ParamValue& p) { return xml::serialize(param_to_xml(p)); }

std::string encode_envelope(const CallEnvelope& e) {
  xml::Element root("Call");
  root.add_leaf("Id", e.message_id);
  append_handle(root.add(xml::Element("Target")), e.target);
  root.add_leaf("Method", e.method);
  auto& params = root.add(xml::Element("Params"));
  for (const auto& p : e.params) {
    try {
      params.add(param_to_xml(p));
    } catch (const Error& err) {
      fail(ErrorKind::EncodeError, std::string("wire: unrepresentable parameter: ") + err.what());
    }
  }
  if (e.credential) root.add_leaf("Credential", *e.credential);
  if (e.reply_to) append_handle(root.add(xml::Element("ReplyTo")), *e.reply_to);
  return xml::serialize(root);
}

CallEnvelope decode_envelope(std::string_view bytes) {
  const auto root = parse_document(bytes);
  if (root.name != "Call") decode_error("root element must be <Call>");
  expect_no_attributes(root);
  expect_element_content(root);
  const auto items = root.elements();
  std::size_t i = 0;
  auto next = [&](std::string_view name) -> const xml::Element* {
    if (i < items.size() && items[i]->name == name) return items[i++];
    return nullptr;
  };
  CallEnvelope e;
  const auto* id = next("Id");
  if (!id) decode_error("missing <Id>");
  e.message_id = leaf_text(*id);
  const auto* target = next("Target");
  if (!target) decode_error("missing <Target>");
  e.target = decode_handle(*target);
  const auto* method = next("Method");
  if (!method) decode_error("missing <Method>");
  e.method = leaf_text(*method);
  const auto* params = next("Params");
  if (!params) decode_error("missing <Params>");
  expect_no_attributes(*params);
  expect_element_content(*params);
  for (const auto* p : params->elements()) e.params.push_back(param_from_xml(*p));
  if (const auto* cred = next("Credential")) e.credential = leaf_text(*cred);
  if (const auto* reply_to = next("ReplyTo")) e.reply_to = decode_handle(*reply_to);
  if (i != items.size()) decode_error("unexpected element <" + items[i]->name + "> in <Call>");
  return e;
}

std::string encode_reply(const ReplyEnvelope& r) {
  xml::Element root("Reply");
  root.add_leaf("Id", r.message_id);
  if (r.result) {
    root.add(xml::Element("Result")).add(param_to_xml(*r.result));
  } else {
    auto& fault = root.add_leaf("Fault", r.fault_message);
    fault.set_attribute("kind", std::string(to_string(r.fault_kind)));
  }
  return xml::serialize(root);
}

ReplyEnvelope decode_reply(std::string_view bytes) {
  const auto root = parse_document(bytes);
  if (root.name != "Reply") decode_error("root element must be <Reply>");
  expect_no_attributes(root);
  expect_element_content(root);
  const auto items = root.elements();
  if (items.size() != 2 || items[0]->name != "Id") decode_error("<Reply> must hold <Id> and one outcome");
  ReplyEnvelope r;
  r.message_id = leaf_text(*items[0]);
  const auto& outcome = *items[1];
  if (outcome.name == "Result") {
    r.result = param_from_xml(only_child(outcome));
  } else if (outcome.name == "Fault") {
    const auto kind = outcome.attribute("kind");
    if (!kind || outcome.attributes.size() != 1) decode_error("<Fault> needs exactly a kind attribute");
    const auto parsed = error_kind_from_string(*kind);
    if (!parsed) decode_error("unknown fault kind '" + *kind + "'");
    if (!outcome.elements().empty()) decode_error("<Fault> must hold text only");
    r.fault_kind = *parsed;
    r.fault_message = outcome.text_content();
  } else {
    decode_error("unexpected element <" + outcome.name + "> in <Reply>");
  }
  return r;
}

}  // namespace servnet::wire
