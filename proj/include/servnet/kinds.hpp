#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "servnet/service.hpp"

namespace servnet {

/// A constructible service class, looked up by its Class_Name.
struct ServiceKind {
  std::string class_name;
  std::string service_type;
  std::string description;
  std::vector<std::vector<ParamSpec>> constructors;
  std::function<std::shared_ptr<Service>(const std::vector<Value>& args)> factory;
};

class ServiceKindRegistry {
 public:
  /// Registry holding the built-in kinds (Basic, Echo, Auto) plus short
  /// aliases for each.
  static ServiceKindRegistry with_builtins();

  void add(ServiceKind kind);
  /// Throws Error(UnknownServiceKind) when class_name is not registered.
  void alias(const std::string& name, const std::string& class_name);
  const ServiceKind* find(const std::string& name) const;
  std::vector<std::string> class_names() const;

 private:
  std::map<std::string, ServiceKind> kinds_;
  std::map<std::string, std::string> aliases_;
};

namespace builtin {

inline constexpr const char* kBasic = "servnet.Basic";
inline constexpr const char* kEcho = "servnet.Echo";
inline constexpr const char* kAuto = "servnet.Auto";

/// Container service with no methods beyond getData.
class BasicService : public Service {
 public:
  BasicService() = default;
};

/// Test service: echo, arithmetic, and a counter whose read-modify-write
/// exposes missing call serialization.
class EchoService : public Service {
 public:
  EchoService();

 private:
  std::int64_t counter_ = 0;
};

/// Autonomic service. Holds a string ID (used by the self-organisation demo)
/// and a key -> (value, quality) item store (used by the search experiment).
class AutoService : public Service {
 public:
  explicit AutoService(std::string id = {});

  struct Item {
    std::string value;
    double quality = 0.0;
  };

 private:
  std::string id_;
  std::map<std::string, Item> items_;
};

}  // namespace builtin
}  // namespace servnet
