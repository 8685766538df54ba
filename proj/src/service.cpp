#include "servnet/service.hpp"

#include "servnet/error.hpp"

namespace servnet {

Service::Service() {
  expose({"getData", {}, "string"}, [this](CallContext&, const std::vector<Value>&) -> Value {
    return data();
  });
}

void Service::expose(MethodDescriptor descriptor, Handler handler) {
  auto name = descriptor.name;
  table_[name] = std::move(descriptor);
  handlers_[name] = std::move(handler);
}

Value Service::invoke(CallContext& ctx, const std::string& method, const std::vector<Value>& args) {
  const auto it = table_.find(method);
  if (it == table_.end()) fail(ErrorKind::UnknownMethod, "no method '" + method + "'");
  const auto& params = it->second.params;
  if (args.size() != params.size()) {
    fail(ErrorKind::MethodFault, method + ": expected " + std::to_string(params.size()) +
                                     " parameters, got " + std::to_string(args.size()));
  }
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!matches_tag(args[i], params[i].type)) {
      fail(ErrorKind::MethodFault, method + ": parameter '" + params[i].name + "' must be " +
                                       params[i].type + ", got " +
                                       std::string(type_tag(args[i].type())));
    }
  }
  try {
    return handlers_.at(method)(ctx, args);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::MethodFault) throw;
    fail(ErrorKind::MethodFault, method + ": " + err.what());
  } catch (const std::exception& err) {
    fail(ErrorKind::MethodFault, method + ": " + err.what());
  }
}

void Service::set_data(std::string data) {
  std::lock_guard lock(data_mutex_);
  data_ = std::move(data);
}

std::string Service::data() const {
  std::lock_guard lock(data_mutex_);
  return data_;
}

}  // namespace servnet
