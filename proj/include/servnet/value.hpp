#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace servnet {

/// Raw bytes carried by a Value. Only the opaque parameter encoding can
/// transport blobs.
struct Blob {
  std::string bytes;
  bool operator==(const Blob&) const = default;
};

/// Dynamically typed value passed to and returned from service methods.
class Value {
 public:
  using List = std::vector<Value>;
  using Map = std::map<std::string, Value>;

  enum class Type { Nil, Bool, Int, Float, String, List, Map, Blob };

  Value() = default;
  Value(bool b) : data_(b) {}
  Value(std::int64_t i) : data_(i) {}
  Value(int i) : data_(static_cast<std::int64_t>(i)) {}
  Value(double d) : data_(d) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(List l) : data_(std::move(l)) {}
  Value(Map m) : data_(std::move(m)) {}
  Value(Blob b) : data_(std::move(b)) {}

  Type type() const noexcept { return static_cast<Type>(data_.index()); }
  bool is_nil() const noexcept { return type() == Type::Nil; }

  // Accessors throw Error(BadArgument) on a type mismatch.
  bool as_bool() const;
  std::int64_t as_int() const;
  /// Accepts Int as well as Float.
  double as_number() const;
  const std::string& as_string() const;
  const List& as_list() const;
  const Map& as_map() const;
  const Blob& as_blob() const;

  bool operator==(const Value& other) const { return data_ == other.data_; }

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::string, List, Map, Blob> data_;
};

/// Type tag used in method signatures: nil, bool, int, float, string, list,
/// map, blob. "any" matches every type.
std::string_view type_tag(Value::Type type) noexcept;
bool matches_tag(const Value& value, std::string_view tag) noexcept;
bool is_known_tag(std::string_view tag) noexcept;

/// Human-readable rendering, used in logs and CLI output.
std::string to_display(const Value& value);

}  // namespace servnet
