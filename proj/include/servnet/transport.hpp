#pragma once

#include <chrono>
#include <map>
#include <string>

namespace servnet {

// Packet framing headers carried on every POST /call.
inline constexpr const char* kHeaderMsgId = "X-Msg-Id";
inline constexpr const char* kHeaderPktIndex = "X-Pkt-Index";
inline constexpr const char* kHeaderPktTotal = "X-Pkt-Total";
inline constexpr const char* kHeaderReplyPkt = "X-Reply-Pkt";
inline constexpr const char* kCallPath = "/call";

struct HttpRequest {
  std::string method = "POST";
  std::string path = kCallPath;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::map<std::string, std::string> headers;
  std::string body;
  std::string content_type = "application/xml";
};

/// Client side of the node protocol. Implementations throw
/// Error(TransportError) when the peer cannot be reached.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& base_uri, const HttpRequest& request) = 0;
};

class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::chrono::milliseconds timeout = std::chrono::seconds(5)) : timeout_(timeout) {}
  HttpResponse post(const std::string& base_uri, const HttpRequest& request) override;

 private:
  std::chrono::milliseconds timeout_;
};

}  // namespace servnet
