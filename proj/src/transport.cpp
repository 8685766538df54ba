#include "servnet/transport.hpp"

#include <httplib.h>

#include "servnet/error.hpp"

namespace servnet {

HttpResponse HttpTransport::post(const std::string& base_uri, const HttpRequest& request) {
  httplib::Client client(base_uri);
  if (!client.is_valid()) fail(ErrorKind::TransportError, "cannot open client for '" + base_uri + "'");
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);
  auto result = client.Post(request.path, headers, request.body, "application/xml");
  if (!result) {
    fail(ErrorKind::TransportError,
         "POST " + base_uri + request.path + " failed: " + httplib::to_string(result.error()));
  }
  HttpResponse response;
  response.status = result->status;
  response.body = result->body;
  for (const auto& [k, v] : result->headers) response.headers[k] = v;
  return response;
}

}  // namespace servnet
