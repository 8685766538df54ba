#include <doctest.h>

#include <thread>

#include "servnet/config.hpp"
#include "servnet/error.hpp"
#include "servnet/http_server.hpp"
#include "servnet/node.hpp"

using namespace servnet;

namespace {

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::BadArgument;
}

NodeConfig config_for(std::string base, std::size_t packet_size = 4096) {
  NodeConfig cfg;
  cfg.base_uri = std::move(base);
  cfg.packet_size = packet_size;
  return cfg;
}

wire::ParamValue p(Value v) { return wire::encode_param_auto(std::move(v)); }

// Counts POSTs on the way to another transport.
class CountingTransport : public Transport {
 public:
  explicit CountingTransport(std::shared_ptr<Transport> inner) : inner_(std::move(inner)) {}
  HttpResponse post(const std::string& base_uri, const HttpRequest& request) override {
    ++posts;
    return inner_->post(base_uri, request);
  }
  std::atomic<int> posts{0};

 private:
  std::shared_ptr<Transport> inner_;
};

}  // namespace

TEST_SUITE("registration") {
  TEST_CASE("built-in Auto service") {
    Node node(config_for("http://n:1"));
    const auto h = node.register_kind(node.root(), "Auto", "Auto", {Value{"abc"}});
    CHECK(node.network().contains(h));
    const auto doc = node.metadata(h);
    CHECK(doc.class_name == builtin::kAuto);
    CHECK(doc.handle == h);
    CHECK(node.call(h, "getId", {}).value == Value{"abc"});
    CHECK(node.network().resolve_handle(h)->sid.id == "abc");
  }

  TEST_CASE("constructor and kind errors") {
    Node node(config_for("http://n:1"));
    CHECK(kind_of([&] { node.register_kind(node.root(), "X", builtin::kAuto, {Value{1}, Value{2}}); }) ==
          ErrorKind::ConstructorMismatch);
    CHECK(kind_of([&] { node.register_kind(node.root(), "X", builtin::kAuto, {Value{1}}); }) ==
          ErrorKind::ConstructorMismatch);
    CHECK(kind_of([&] { node.register_kind(node.root(), "X", "no.such.Kind"); }) == ErrorKind::UnknownServiceKind);
    node.register_kind(node.root(), "X", builtin::kBasic);
    CHECK(kind_of([&] { node.register_kind(node.root(), "X", builtin::kBasic); }) == ErrorKind::DuplicateChildName);
  }

  TEST_CASE("factory spec from a metadata document") {
    Node node(config_for("http://n:1"));
    meta::MetadataDoc spec;
    spec.class_name = builtin::kAuto;
    spec.service_type = "searcher";
    spec.constructors.push_back(ConstructorDescriptor{{{"id", "string"}}, std::vector<Value>{Value{"zz"}}});
    spec.archive_uris.push_back("http://archive.example/auto.jar");
    const auto h = node.register_service(node.root(), "S", spec);
    const auto doc = node.metadata(h);
    CHECK(doc.service_type == "searcher");
    CHECK(doc.archive_uris == spec.archive_uris);
    REQUIRE(doc.constructors.size() == 2);
    CHECK(doc.constructors[1].args == std::vector<Value>{Value{"zz"}});
  }

  TEST_CASE("config file aliases select kinds") {
    auto cfg = parse_config("# demo\nbase_uri = http://cfg:2\nkind.Searcher = servnet.Auto\npacket_size=64\n");
    CHECK(cfg.packet_size == 64);
    Node node(cfg);
    CHECK(node.base_uri() == "http://cfg:2");
    const auto h = node.register_kind(node.root(), "S", "Searcher");
    CHECK(node.metadata(h).class_name == builtin::kAuto);
    CHECK(kind_of([] { parse_config("packet_size = 0\n"); }) == ErrorKind::InvalidConfig);
    CHECK(kind_of([] { parse_config("what = 1\n"); }) == ErrorKind::InvalidConfig);
    CHECK(kind_of([] { parse_config("listen = nohost\n"); }) == ErrorKind::InvalidConfig);
  }
}

TEST_SUITE("dispatch") {
  TEST_CASE("echo, faults and unknown targets") {
    Node node(config_for("http://n:1"));
    const auto h = node.register_kind(node.root(), "E", builtin::kEcho);
    CHECK(node.call(h, "echo", {p(Value{"x"})}).value == Value{"x"});
    CHECK(node.call(h, "add", {p(Value{2}), p(Value{40})}).value == Value{42});
    CHECK(kind_of([&] { node.call(h, "nope", {}); }) == ErrorKind::UnknownMethod);
    CHECK(kind_of([&] { node.call(h, "add", {p(Value{"a"}), p(Value{1})}); }) == ErrorKind::MethodFault);
    CHECK(kind_of([&] { node.call(h, "add", {}); }) == ErrorKind::MethodFault);
    CHECK(kind_of([&] { node.call(h.child("ghost"), "echo", {p(Value{})}); }) == ErrorKind::UnknownService);
  }

  TEST_CASE("wrong credential is denied") {
    Node node(config_for("http://n:1"));
    const auto h = node.register_kind(node.root(), "E", builtin::kBasic);
    access::AccessConfig cfg;
    cfg.groups = {{"g", 1, access::hash_password("right"), {}}};
    cfg.method_group = {{"getData", "g"}};
    node.install_config(h, cfg);
    CHECK(kind_of([&] { node.call(h, "getData", {}, "wrong"); }) == ErrorKind::AccessDenied);
    CHECK(node.call(h, "getData", {}, "right").value == Value{""});
    cfg.method_group.clear();
    CHECK(kind_of([&] { node.install_config(h, cfg); }) == ErrorKind::UncoveredMethod);
    cfg.method_group = {{"getData", "g"}};
    cfg.groups[0].excluded.insert("g");
    CHECK(kind_of([&] { node.install_config(h, cfg); }) == ErrorKind::InvalidConfig);
  }

  TEST_CASE("parallel calls") {
    Node node(config_for("http://n:1"));
    const auto shared = node.register_kind(node.root(), "Shared", builtin::kEcho);
    std::vector<Handle> independent;
    for (int i = 0; i < 100; ++i) independent.push_back(node.register_kind(node.root(), "E" + std::to_string(i), builtin::kEcho));
    std::atomic<int> failures{0};
    std::vector<std::thread> threads;
    for (int i = 0; i < 100; ++i) {
      threads.emplace_back([&, i] {
        try {
          node.call(shared, "increment", {});
          if (node.call(independent[i], "add", {p(Value{i}), p(Value{1})}).value != Value{i + 1}) ++failures;
        } catch (...) {
          ++failures;
        }
      });
    }
    for (auto& t : threads) t.join();
    CHECK(failures == 0);
    CHECK(node.call(shared, "count", {}).value == Value{100});
  }
}

TEST_SUITE("remote calls") {
  TEST_CASE("loopback transport with split messages and replies") {
    auto loop = std::make_shared<LoopbackTransport>();
    auto counting = std::make_shared<CountingTransport>(loop);
    Node node(config_for("http://self:1", 64));
    loop->attach(node);
    node.set_transport(counting);
    const auto h = node.register_kind(node.root(), "E", builtin::kEcho);
    const Value big{std::string(1000, 'q')};
    CHECK(node.call_remote(h, "echo", {p(big)}).value == big);
    CHECK(counting->posts > 20);
    CHECK(node.stats().packets_received == static_cast<std::uint64_t>(counting->posts.load()));
  }

  TEST_CASE("remote faults carry the remote kind") {
    auto loop = std::make_shared<LoopbackTransport>();
    Node a(config_for("http://a:1"));
    Node b(config_for("http://b:1"));
    loop->attach(a);
    loop->attach(b);
    a.set_transport(loop);
    const auto target = b.register_kind(b.root(), "E", builtin::kEcho);
    CHECK(a.call(target, "concat", {p(Value{"x"}), p(Value{"y"})}).value == Value{"xy"});
    try {
      a.call(target, "nope", {});
      FAIL("expected RemoteFault");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::RemoteFault);
      CHECK(e.remote_kind() == ErrorKind::UnknownMethod);
    }
    CHECK(kind_of([&] { a.call(Handle{"http://c:1", {"E"}}, "echo", {p(Value{})}); }) == ErrorKind::TransportError);
  }

  TEST_CASE("replayed packets are idempotent and bad framing is rejected") {
    Node node(config_for("http://self:1", 16));
    const auto h = node.register_kind(node.root(), "E", builtin::kEcho);
    const auto bytes = wire::encode_envelope(wire::CallEnvelope{"r1", h, "echo", {p(Value{"hi"})}, {}, {}});
    const auto packets = wire::split_packets("r1", bytes, 16);
    auto request_for = [](const wire::Packet& pk) {
      HttpRequest r;
      r.headers = {{"x-msg-id", pk.message_id},
                   {"X-Pkt-Index", std::to_string(pk.index)},
                   {"X-Pkt-Total", std::to_string(pk.total)}};
      r.body = pk.payload;
      return r;
    };
    CHECK(node.receive_packet(request_for(packets[0])).status == 202);
    CHECK(node.receive_packet(request_for(packets[0])).status == 202);
    for (std::size_t i = 1; i + 1 < packets.size(); ++i) CHECK(node.receive_packet(request_for(packets[i])).status == 202);
    const auto reply = node.receive_packet(request_for(packets.back()));
    CHECK(reply.status == 200);
    CHECK(find_header(reply.headers, "x-pkt-index") == "0");

    HttpRequest bad;
    bad.headers = {{kHeaderMsgId, "z"}, {kHeaderPktIndex, "3"}, {kHeaderPktTotal, "2"}};
    CHECK(node.receive_packet(bad).status == 400);
    bad.headers = {{kHeaderPktIndex, "0"}, {kHeaderPktTotal, "1"}};
    CHECK(node.receive_packet(bad).status == 400);
    auto conflicting = request_for(packets[0]);
    conflicting.headers[kHeaderMsgId] = "r2";
    node.receive_packet(conflicting);
    conflicting.body = "different";
    CHECK(node.receive_packet(conflicting).status == 409);
  }

  TEST_CASE("HTTP loopback equals local dispatch") {
    HttpServer server("127.0.0.1", 0);
    Node node(config_for(server.base_uri(), 128));
    server.attach(node);
    server.start();
    const auto h = node.register_kind(node.root(), "E", builtin::kEcho);
    const auto twin = node.register_kind(node.root(), "T", builtin::kEcho);
    const Value arg{Value::List{Value{1}, Value{"two"}, Value{Value::Map{{"k", Value{3.5}}}}}};
    CHECK(wire::encode_param_bytes(node.call_remote(h, "reverse", {p(arg)})) ==
          wire::encode_param_bytes(node.dispatch({"l", h, "reverse", {p(arg)}, {}, {}})));
    CHECK(node.call_remote(h, "increment", {}) == node.call(twin, "increment", {}));
    server.stop();
  }

  TEST_CASE("unreachable node") {
    Node node(config_for("http://self:1"));
    int port = 0;
    {
      HttpServer probe("127.0.0.1", 0);
      port = probe.port();
    }
    CHECK(kind_of([&] {
            node.call(Handle{"http://127.0.0.1:" + std::to_string(port), {"E"}}, "echo", {p(Value{})});
          }) == ErrorKind::TransportError);
  }
}
