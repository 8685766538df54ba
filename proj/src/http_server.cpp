#include "servnet/http_server.hpp"

#include <httplib.h>

#include "servnet/error.hpp"
#include "servnet/node.hpp"

namespace servnet {
namespace {

HttpRequest to_request(const httplib::Request& req) {
  HttpRequest out;
  out.method = req.method;
  out.path = req.path;
  out.body = req.body;
  for (const auto& [k, v] : req.headers) out.headers[k] = v;
  for (const auto& [k, v] : req.params) out.query[k] = v;
  return out;
}

void write_response(const HttpResponse& in, httplib::Response& res) {
  res.status = in.status;
  for (const auto& [k, v] : in.headers) res.set_header(k, v);
  res.set_content(in.body, in.content_type);
}

}  // namespace

struct HttpServer::Impl {
  httplib::Server server;
  Node* node = nullptr;
  Handler admin;
  bool stopped = false;
};

HttpServer::HttpServer(const std::string& host, int port) : impl_(std::make_unique<Impl>()), host_(host) {
  if (port < 0 || port > 65535) fail(ErrorKind::InvalidConfig, "port out of range: " + std::to_string(port));
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) fail(ErrorKind::TransportError, "cannot bind " + host + ":" + std::to_string(port));

  auto& impl = *impl_;
  impl.server.Post(kCallPath, [&impl](const httplib::Request& req, httplib::Response& res) {
    if (!impl.node) {
      res.status = 503;
      return;
    }
    write_response(impl.node->receive_packet(to_request(req)), res);
  });
  auto admin = [&impl](const httplib::Request& req, httplib::Response& res) {
    if (!impl.admin) {
      res.status = 404;
      res.set_content("admin interface disabled", "text/plain");
      return;
    }
    write_response(impl.admin(to_request(req)), res);
  };
  impl.server.Get(R"(/admin/.*)", admin);
  impl.server.Post(R"(/admin/.*)", admin);
}

HttpServer::~HttpServer() { stop(); }

std::string HttpServer::base_uri() const { return "http://" + host_ + ":" + std::to_string(port_); }

void HttpServer::attach(Node& node) { impl_->node = &node; }

void HttpServer::set_admin_handler(Handler handler) { impl_->admin = std::move(handler); }

void HttpServer::start() {
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::run() {
  impl_->server.listen_after_bind();
  impl_->stopped = true;
}

void HttpServer::stop() {
  // httplib only closes the bound socket from a running listener.
  if (!thread_.joinable() && !impl_->stopped) start();
  impl_->stopped = true;
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace servnet
