#include "servnet/value.hpp"

#include <array>

#include "servnet/error.hpp"

namespace servnet {
namespace {

constexpr std::array<std::string_view, 8> kTags{"nil", "bool", "int", "float",
                                                "string", "list", "map", "blob"};

[[noreturn]] void mismatch(Value::Type want, Value::Type got) {
  fail(ErrorKind::BadArgument, "expected " + std::string(type_tag(want)) + ", got " +
                                   std::string(type_tag(got)));
}

}  // namespace

bool Value::as_bool() const {
  if (const auto* p = std::get_if<bool>(&data_)) return *p;
  mismatch(Type::Bool, type());
}

std::int64_t Value::as_int() const {
  if (const auto* p = std::get_if<std::int64_t>(&data_)) return *p;
  mismatch(Type::Int, type());
}

double Value::as_number() const {
  if (const auto* p = std::get_if<double>(&data_)) return *p;
  if (const auto* p = std::get_if<std::int64_t>(&data_)) return static_cast<double>(*p);
  mismatch(Type::Float, type());
}

const std::string& Value::as_string() const {
  if (const auto* p = std::get_if<std::string>(&data_)) return *p;
  mismatch(Type::String, type());
}

const Value::List& Value::as_list() const {
  if (const auto* p = std::get_if<List>(&data_)) return *p;
  mismatch(Type::List, type());
}

const Value::Map& Value::as_map() const {
  if (const auto* p = std::get_if<Map>(&data_)) return *p;
  mismatch(Type::Map, type());
}

const Blob& Value::as_blob() const {
  if (const auto* p = std::get_if<Blob>(&data_)) return *p;
  mismatch(Type::Blob, type());
}

std::string_view type_tag(Value::Type type) noexcept {
  return kTags[static_cast<std::size_t>(type)];
}

bool is_known_tag(std::string_view tag) noexcept {
  if (tag == "any") return true;
  for (auto t : kTags) {
    if (t == tag) return true;
  }
  return false;
}

bool matches_tag(const Value& value, std::string_view tag) noexcept {
  return tag == "any" || type_tag(value.type()) == tag;
}

std::string to_display(const Value& value) {
  switch (value.type()) {
    case Value::Type::Nil: return "nil";
    case Value::Type::Bool: return value.as_bool() ? "true" : "false";
    case Value::Type::Int: return std::to_string(value.as_int());
    case Value::Type::Float: return std::to_string(value.as_number());
    case Value::Type::String: return '"' + value.as_string() + '"';
    case Value::Type::Blob: return "<blob " + std::to_string(value.as_blob().bytes.size()) + " bytes>";
    case Value::Type::List: {
      std::string out = "[";
      for (const auto& v : value.as_list()) {
        if (out.size() > 1) out += ", ";
        out += to_display(v);
      }
      return out + "]";
    }
    case Value::Type::Map: {
      std::string out = "{";
      for (const auto& [k, v] : value.as_map()) {
        if (out.size() > 1) out += ", ";
        out += k + ": " + to_display(v);
      }
      return out + "}";
    }
  }
  return {};
}

}  // namespace servnet
