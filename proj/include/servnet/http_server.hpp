#pragma once

#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "servnet/transport.hpp"

namespace servnet {

class Node;

/// Socket front end for a node. The port is bound at construction so a node
/// created afterwards can learn its own base URI (port 0 picks a free one).
/// POST /call goes to Node::receive_packet; /admin/* goes to the admin
/// handler when one is set.
class HttpServer {
 public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;

  HttpServer(const std::string& host, int port);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  int port() const noexcept { return port_; }
  const std::string& host() const noexcept { return host_; }
  std::string base_uri() const;

  void attach(Node& node);
  void set_admin_handler(Handler handler);

  /// Serves on a background thread until stop().
  void start();
  /// Serves on the calling thread.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string host_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace servnet
