#include "servnet/kinds.hpp"

#include <algorithm>
#include <thread>

#include "servnet/error.hpp"

namespace servnet {

void ServiceKindRegistry::add(ServiceKind kind) {
  auto name = kind.class_name;
  kinds_[name] = std::move(kind);
}

void ServiceKindRegistry::alias(const std::string& name, const std::string& class_name) {
  if (!kinds_.contains(class_name)) {
    fail(ErrorKind::UnknownServiceKind, "cannot alias '" + name + "' to unknown class '" + class_name + "'");
  }
  aliases_[name] = class_name;
}

const ServiceKind* ServiceKindRegistry::find(const std::string& name) const {
  if (const auto it = kinds_.find(name); it != kinds_.end()) return &it->second;
  if (const auto it = aliases_.find(name); it != aliases_.end()) return &kinds_.at(it->second);
  return nullptr;
}

std::vector<std::string> ServiceKindRegistry::class_names() const {
  std::vector<std::string> out;
  for (const auto& [name, kind] : kinds_) out.push_back(name);
  return out;
}

ServiceKindRegistry ServiceKindRegistry::with_builtins() {
  ServiceKindRegistry reg;
  reg.add({builtin::kBasic, "container", "Holds nested services.", {{}},
           [](const std::vector<Value>&) { return std::make_shared<builtin::BasicService>(); }});
  reg.add({builtin::kEcho, "test service", "Echoes and combines its arguments.", {{}},
           [](const std::vector<Value>&) { return std::make_shared<builtin::EchoService>(); }});
  reg.add({builtin::kAuto, "autonomic service",
           "Runs a behaviour that evaluates peers and links to them.",
           {{}, {{"id", "string"}}},
           [](const std::vector<Value>& args) {
             return std::make_shared<builtin::AutoService>(args.empty() ? std::string{} : args[0].as_string());
           }});
  reg.alias("Basic", builtin::kBasic);
  reg.alias("Echo", builtin::kEcho);
  reg.alias("Auto", builtin::kAuto);
  return reg;
}

namespace builtin {

EchoService::EchoService() {
  expose({"echo", {{"x", "any"}}, "any"},
         [](CallContext&, const std::vector<Value>& a) { return a[0]; });
  expose({"add", {{"a", "int"}, {"b", "int"}}, "int"},
         [](CallContext&, const std::vector<Value>& a) -> Value { return a[0].as_int() + a[1].as_int(); });
  expose({"concat", {{"a", "string"}, {"b", "string"}}, "string"},
         [](CallContext&, const std::vector<Value>& a) -> Value { return a[0].as_string() + a[1].as_string(); });
  expose({"reverse", {{"items", "list"}}, "list"}, [](CallContext&, const std::vector<Value>& a) -> Value {
    auto items = a[0].as_list();
    std::reverse(items.begin(), items.end());
    return items;
  });
  expose({"increment", {}, "int"}, [this](CallContext&, const std::vector<Value>&) -> Value {
    const auto seen = counter_;
    std::this_thread::yield();
    counter_ = seen + 1;
    return counter_;
  });
  expose({"count", {}, "int"}, [this](CallContext&, const std::vector<Value>&) -> Value { return counter_; });
}

AutoService::AutoService(std::string id) : id_(std::move(id)) {
  expose({"getId", {}, "string"}, [this](CallContext&, const std::vector<Value>&) -> Value { return id_; });
  expose({"setId", {{"id", "string"}}, "nil"}, [this](CallContext&, const std::vector<Value>& a) -> Value {
    id_ = a[0].as_string();
    return {};
  });
  expose({"lookup", {{"key", "string"}}, "map"}, [this](CallContext&, const std::vector<Value>& a) -> Value {
    Value::Map out;
    const auto it = items_.find(a[0].as_string());
    out["found"] = it != items_.end();
    if (it != items_.end()) {
      out["value"] = it->second.value;
      out["quality"] = it->second.quality;
    }
    return out;
  });
  expose({"store", {{"key", "string"}, {"value", "string"}, {"quality", "float"}}, "nil"},
         [this](CallContext&, const std::vector<Value>& a) -> Value {
           items_[a[0].as_string()] = Item{a[1].as_string(), a[2].as_number()};
           return {};
         });
  expose({"itemCount", {}, "int"}, [this](CallContext&, const std::vector<Value>&) -> Value {
    return static_cast<std::int64_t>(items_.size());
  });
}

}  // namespace builtin
}  // namespace servnet
