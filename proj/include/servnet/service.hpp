#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "servnet/handle.hpp"
#include "servnet/value.hpp"
#include "servnet/wire.hpp"

namespace servnet {

struct ParamSpec {
  std::string name;
  std::string type;  // a value type tag or "any"

  bool operator==(const ParamSpec&) const = default;
};

struct MethodDescriptor {
  std::string name;
  std::vector<ParamSpec> params;
  std::string returns = "nil";
  std::string access_group = "public";

  bool operator==(const MethodDescriptor&) const = default;
};

using MethodTable = std::map<std::string, MethodDescriptor>;

/// A constructor signature; args holds the values an instance was built with.
struct ConstructorDescriptor {
  std::vector<ParamSpec> params;
  std::optional<std::vector<Value>> args;

  bool operator==(const ConstructorDescriptor&) const = default;
};

/// Anything able to route a call to a handle: local dispatch or remote node.
class Caller {
 public:
  virtual ~Caller() = default;
  virtual wire::ParamValue call(const Handle& target, const std::string& method,
                                std::vector<wire::ParamValue> params,
                                std::optional<std::string> credential = std::nullopt) = 0;
};

struct CallContext {
  Handle self;
  Caller* caller = nullptr;
};

/// Base class for service implementations. Methods are exposed with a
/// descriptor and a handler; the node server is the only component that
/// invokes them, one call at a time per instance.
class Service {
 public:
  using Handler = std::function<Value(CallContext&, const std::vector<Value>&)>;

  virtual ~Service() = default;
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const MethodTable& methods() const noexcept { return table_; }

  /// Checks arity and parameter types, then runs the handler. Throws
  /// Error(UnknownMethod) or Error(MethodFault).
  Value invoke(CallContext& ctx, const std::string& method, const std::vector<Value>& args);

  /// Initial data supplied by an admin document, returned by getData.
  void set_data(std::string data);
  std::string data() const;

  std::mutex& exec_mutex() noexcept { return exec_mutex_; }

 protected:
  Service();
  void expose(MethodDescriptor descriptor, Handler handler);

 private:
  MethodTable table_;
  std::map<std::string, Handler> handlers_;
  mutable std::mutex data_mutex_;
  std::string data_;
  std::mutex exec_mutex_;
};

}  // namespace servnet
