#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "devgeo/corpus.hpp"
#include "devgeo/errors.hpp"

using namespace devgeo;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("devgeo_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& content) {
  std::ofstream(p, std::ios::binary) << content;
}

}  // namespace

TEST_CASE("load_corpus reads a manifest and skips bad lines") {
  const auto dir = scratch_dir("corpus");
  write(dir / "a.html", "<html><body>A</body></html>");
  write(dir / "b.html", "<html><body>B</body></html>");
  write(dir / "manifest.jsonl",
        "{\"page_id\":\"b\",\"ip\":\"10.0.0.2\",\"port\":80,\"html_path\":\"b.html\"}\n"
        "{\"page_id\":\"a\",\"ip\":\"10.0.0.1\",\"port\":8080,\"html_path\":\"a.html\",\"captured_at\":\"2024\"}\n"
        "not json\n"
        "{\"page_id\":\"c\",\"ip\":\"999.1.1.1\",\"port\":80,\"html_path\":\"a.html\"}\n"
        "{\"page_id\":\"a\",\"ip\":\"10.0.0.3\",\"port\":80,\"html_path\":\"a.html\"}\n"
        "{\"page_id\":\"d\",\"ip\":\"10.0.0.4\",\"port\":80,\"html_path\":\"missing.html\"}\n");
  const auto r = load_corpus(dir);
  REQUIRE(r.pages.size() == 2);
  CHECK(r.pages[0].page_id == "a");
  CHECK(r.pages[0].endpoint.port == 8080);
  CHECK(r.pages[0].captured_at == "2024");
  CHECK(r.pages[1].page_id == "b");
  CHECK(r.skipped == 4);
  CHECK(r.diagnostics.size() == 4);
}

TEST_CASE("load_corpus on an empty directory and a missing path") {
  const auto dir = scratch_dir("empty");
  CHECK(load_corpus(dir).pages.empty());
  CHECK_THROWS_AS(load_corpus(dir / "nope"), CorpusError);
}

TEST_CASE("is_valid_ip") {
  CHECK(is_valid_ip("192.0.2.1"));
  CHECK(is_valid_ip("2001:db8::1"));
  CHECK_FALSE(is_valid_ip("192.0.2"));
  CHECK_FALSE(is_valid_ip("example.com"));
}

TEST_CASE("parse_dom builds a tree and keeps only id and class") {
  const auto tree = parse_dom(
      "<!DOCTYPE html><html><head><title>T</title><script>if (a<b) x();</script></head>"
      "<body id=\"main\" style=\"x\"><p class=\"c\">one<br>two</p><!-- hidden --><ul><li>x<li>y</ul></body></html>");
  CHECK(tree.root.tag == "html");
  REQUIRE(tree.root.children.size() == 2);
  const auto& body = tree.root.children[1];
  CHECK(body.tag == "body");
  REQUIRE(body.attrs.size() == 1);
  CHECK(body.attrs[0].first == "id");
  const auto& p = body.children[0];
  CHECK(p.text == "one two");
  CHECK(p.children.size() == 1);  // br
  const auto& ul = body.children[1];
  REQUIRE(ul.children.size() == 2);
  CHECK(ul.children[1].text == "y");
  CHECK(tree.root.children[0].children[1].tag == "script");
  CHECK(tree.root.children[0].children[1].text.empty());
}

TEST_CASE("parse_dom decodes entities and tolerates stray end tags") {
  const auto tree = parse_dom("<div>A&amp;B&nbsp;&#67;&#x44;</span></div>");
  CHECK(tree.root.tag == "div");
  CHECK(tree.root.text == "A&B CD");
}

TEST_CASE("parse_dom on text-only input wraps it in a synthetic root") {
  const auto tree = parse_dom("just some text");
  CHECK(tree.root.tag == "html");
  CHECK(tree.root.text == "just some text");
  CHECK(tree.node_count == 1);
}

TEST_CASE("parse_dom rejects empty and undecodable input") {
  CHECK_THROWS_AS(parse_dom(""), PageUnparseable);
  CHECK_THROWS_AS(parse_dom("\xFF\xFE\xFD"), PageUnparseable);
  CHECK_NOTHROW(parse_dom("<p>\xFF</p>"));
}

TEST_CASE("serialize_page emits depth-tagged structure then texts") {
  const auto tree = parse_dom("<html><body><div id=\"x\">hi</div><p>there</p></body></html>");
  const auto s = serialize_page(tree, "p1");
  CHECK(s.page_id == "p1");
  CHECK(s.composite == std::string("html(0)body(1)div(2)[id]p(2)") + kCompositeDelimiter + "hi" +
                           kCompositeDelimiter + "there");
}
