#include <doctest.h>

#include <algorithm>
#include <set>

#include "servnet/error.hpp"
#include "servnet/handle.hpp"
#include "servnet/network.hpp"
#include "servnet/xml.hpp"
#include "support/generators.hpp"

using namespace servnet;

namespace {

const std::string kBase = "http://1234.5.6.7:8888";

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

ServiceNode plain_node(std::string id = "svc") {
  ServiceNode n;
  n.sid.id = std::move(id);
  return n;
}

}  // namespace

TEST_SUITE("xml") {
  TEST_CASE("round trip keeps structure and escapes") {
    xml::Element root("Doc");
    root.set_attribute("a", "x\"<&>\n\ty");
    root.add_leaf("T", "1 < 2 && \"q\" ]]> \x01");
    root.add(xml::Element("Empty"));
    const auto text = xml::serialize(root);
    CHECK(text.find('\n') == std::string::npos);
    CHECK(xml::parse(text) == root);
  }

  TEST_CASE("entities, character references, CDATA and comments") {
    const auto e = xml::parse(
        "<?xml version=\"1.0\"?><!-- c --><r k='v&amp;w'>a&lt;&#65;&#x42;<![CDATA[<raw>]]><!-- x --></r>");
    CHECK(e.name == "r");
    CHECK(e.attribute("k") == "v&w");
    CHECK(e.text_content() == "a<AB<raw>");
  }

  TEST_CASE("malformed documents raise ParseError") {
    for (const char* bad : {"", "<a>", "<a></b>", "<a x=1/>", "<a/><b/>", "text", "<a>&bogus;</a>", "<a><</a>"}) {
      CAPTURE(bad);
      CHECK(kind_of([&] { xml::parse(bad); }) == ErrorKind::ParseError);
    }
  }

  TEST_CASE("nesting depth is bounded") {
    std::string deep;
    for (int i = 0; i < 1000; ++i) deep += "<a>";
    for (int i = 0; i < 1000; ++i) deep += "</a>";
    CHECK(kind_of([&] { xml::parse(deep); }) == ErrorKind::ParseError);
  }
}

TEST_SUITE("handle codec") {
  TEST_CASE("reference example is bit-exact") {
    const Handle h{kBase, {"Service1", "Service2"}};
    CHECK(to_wire(h) == "<U>http://1234.5.6.7:8888</U><S>Service1</S><S>Service2</S>");
    CHECK(parse_handle(to_wire(h)) == h);
  }

  TEST_CASE("single segment gives one U and one S") {
    CHECK(to_wire(Handle{kBase, {"A"}}) == "<U>http://1234.5.6.7:8888</U><S>A</S>");
  }

  TEST_CASE("malformed wire strings") {
    for (const char* bad : {"<S>A</S>", "", "<U>http://h</U><X>A</X>", "<S>A</S><U>http://h</U>",
                            "<U>http://h</U><S></S>", "<U>not a uri</U><S>A</S>", "<U>http://h</U><S>A</S"}) {
      CAPTURE(bad);
      CHECK(kind_of([&] { parse_handle(bad); }) == ErrorKind::ParseError);
    }
  }

  TEST_CASE("fuzzed handles round trip") {
    testgen::Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
      const auto h = testgen::handle(rng);
      const auto wire = to_wire(h);
      CHECK(wire.find('\n') == std::string::npos);
      REQUIRE(parse_handle(wire) == h);
    }
  }

  TEST_CASE("name and uri validation") {
    CHECK(is_valid_service_name("Service1"));
    CHECK_FALSE(is_valid_service_name(""));
    CHECK_FALSE(is_valid_service_name("a/b"));
    CHECK_FALSE(is_valid_service_name("a<b"));
    CHECK(is_valid_base_uri("http://h:1"));
    CHECK_FALSE(is_valid_base_uri("h:1"));
    CHECK(is_valid_uri("urn:isbn:1"));
    CHECK_FALSE(is_valid_uri("not a uri"));
    CHECK(split_path("a/b/c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_path("").empty());
  }
}

TEST_SUITE("network tree") {
  TEST_CASE("nesting follows the path example") {
    Network net(kBase);
    const auto s1 = net.add_nested(net.root_handle(), "Service1", plain_node());
    CHECK(s1 == Handle{kBase, {"Service1"}});
    const auto s2 = net.add_nested(s1, "Service2", plain_node("two"));
    CHECK(s2 == Handle{kBase, {"Service1", "Service2"}});
    CHECK(net.resolve_handle(s2)->sid.id == "two");
    CHECK(net.children(s1) == std::vector<std::string>{"Service2"});
  }

  TEST_CASE("add_nested errors") {
    Network net(kBase);
    const auto a = net.add_nested(net.root_handle(), "A", plain_node());
    CHECK(kind_of([&] { net.add_nested(net.root_handle(), "A", plain_node()); }) == ErrorKind::DuplicateChildName);
    CHECK(kind_of([&] { net.add_nested(a.child("missing"), "B", plain_node()); }) == ErrorKind::UnknownParent);
    CHECK(kind_of([&] { net.add_nested(a, "x/y", plain_node()); }) == ErrorKind::InvalidServiceName);
    CHECK(kind_of([&] { net.add_nested(Handle{"http://other:1", {}}, "B", plain_node()); }) == ErrorKind::ForeignNode);
    CHECK(kind_of([] { Network bad("nope"); }) == ErrorKind::MalformedUri);
  }

  TEST_CASE("resolve errors") {
    Network net(kBase);
    CHECK(kind_of([&] { net.resolve_handle(Handle{kBase, {"NoSuch"}}); }) == ErrorKind::UnknownService);
    CHECK(kind_of([&] { net.resolve_handle(Handle{"http://elsewhere:1", {"A"}}); }) == ErrorKind::ForeignNode);
  }

  TEST_CASE("permanent links are local, directed and idempotent") {
    Network net(kBase);
    const auto a = net.add_nested(net.root_handle(), "A", plain_node());
    const auto b = net.add_nested(net.root_handle(), "B", plain_node());
    net.link_permanent(a, b, true);
    net.link_permanent(a, b, true);
    CHECK(net.permanent_links(a) == std::vector<Handle>{b});
    CHECK(net.permanent_links(b).empty());
    net.link_permanent(a, b, false);
    net.link_permanent(a, b, false);
    CHECK(net.permanent_links(a).empty());
    CHECK(kind_of([&] { net.link_permanent(a, Handle{"http://other:9", {"B"}}, true); }) ==
          ErrorKind::CrossNetworkPermanentLink);
    CHECK(kind_of([&] { net.link_permanent(a, a.child("ghost"), true); }) == ErrorKind::UnknownService);
  }

  TEST_CASE("removing a service drops links into it") {
    Network net(kBase);
    const auto a = net.add_nested(net.root_handle(), "A", plain_node());
    const auto b = net.add_nested(net.root_handle(), "B", plain_node());
    const auto c = net.add_nested(b, "C", plain_node());
    net.link_permanent(a, c, true);
    net.remove_nested(b);
    CHECK(net.permanent_links(a).empty());
    CHECK_FALSE(net.contains(c));
  }

  TEST_CASE("associations are an ordered set") {
    Network net(kBase);
    const auto a = net.add_nested(net.root_handle(), "A", plain_node());
    net.add_association(a, "http://remote.example:8888");
    net.add_association(a, "urn:x");
    net.add_association(a, "http://remote.example:8888");
    CHECK(net.associations(a) == std::vector<std::string>{"http://remote.example:8888", "urn:x"});
    CHECK(kind_of([&] { net.add_association(a, "not a uri"); }) == ErrorKind::MalformedUri);
    CHECK(kind_of([&] { net.add_association(a.child("x"), "urn:y"); }) == ErrorKind::UnknownService);
  }

  TEST_CASE("random operation sequences keep tree and locality invariants") {
    testgen::Rng rng(11);
    for (int round = 0; round < 50; ++round) {
      Network net(kBase);
      std::vector<Handle> live;
      for (int step = 0; step < 60; ++step) {
        const auto op = testgen::uniform(rng, 0, 9);
        try {
          if (op < 5 || live.empty()) {
            const auto parent = live.empty() || testgen::coin(rng, 0.3)
                                    ? net.root_handle()
                                    : live[testgen::uniform(rng, 0, live.size() - 1)];
            live.push_back(net.add_nested(parent, "n" + std::to_string(testgen::uniform(rng, 0, 5)), plain_node()));
          } else if (op < 8) {
            const auto& a = live[testgen::uniform(rng, 0, live.size() - 1)];
            const auto& b = live[testgen::uniform(rng, 0, live.size() - 1)];
            net.link_permanent(a, b, testgen::coin(rng, 0.7));
          } else {
            net.remove_nested(live[testgen::uniform(rng, 0, live.size() - 1)]);
          }
        } catch (const Error&) {
        }
        std::erase_if(live, [&](const Handle& h) { return !net.contains(h); });
      }
      const auto all = net.all_services();
      const std::set<Handle> unique(all.begin(), all.end());
      CHECK(unique.size() == all.size());
      for (const auto& h : all) {
        CHECK(net.resolve_handle(h));
        for (const auto& target : net.permanent_links(h)) {
          CHECK(target.base_uri == h.base_uri);
          CHECK(net.contains(target));
        }
      }
    }
  }
}
