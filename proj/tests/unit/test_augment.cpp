#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>

#include "devgeo/augment.hpp"
#include "devgeo/errors.hpp"

using namespace devgeo;
namespace fs = std::filesystem;

namespace {

ClueRecord clue(std::string text) {
  ClueRecord c;
  c.page_id = "p1";
  c.cluster_id = 2;
  c.path = "html[0]/body[0]";
  c.text = std::move(text);
  return c;
}

// Fails the first `failures` calls, then answers with one snippet.
class CountingBackend : public SearchBackend {
 public:
  explicit CountingBackend(int failures = 0) : failures_(failures) {}
  std::vector<Snippet> search(std::string_view query, std::size_t max_results) override {
    const int n = ++calls;
    if (n <= failures_) throw BackendError("transient");
    std::vector<Snippet> out;
    for (std::size_t i = 0; i < 12 && i < max_results; ++i) {
      out.push_back({"t" + std::to_string(i), std::string(query), "https://example.test/" + std::to_string(i)});
    }
    return out;
  }
  std::string tag() const override { return "counting"; }
  std::atomic<int> calls{0};

 private:
  int failures_;
};

AugmenterOptions fast_options() {
  AugmenterOptions o;
  o.backoff = std::chrono::milliseconds(0);
  o.requests_per_second = 0;
  return o;
}

std::string fixed_clock() { return "2024-01-01T00:00:00Z"; }

}  // namespace

TEST_CASE("build_query strips control characters and collapses whitespace") {
  CHECK(build_query(clue("  gicc\tbldg\n3 ")).query_text == "gicc bldg 3");
  CHECK(build_query(clue("a\x01\x7f" "b\xC2\x85" "c")).query_text == "abc");
  const auto q = build_query(clue("x"));
  CHECK(q.origin.page_id == "p1");
  CHECK(q.origin.cluster_id == 2);
  CHECK_THROWS_AS(build_query(clue("\x01\x02 \t")), QuerySkipped);
  CHECK_THROWS_AS(build_query(clue("")), QuerySkipped);
}

TEST_CASE("build_query truncates long text on a word boundary") {
  std::string text;
  for (int i = 0; i < 60; ++i) text += "word" + std::to_string(i % 10) + " ";
  const auto q = build_query(clue(text)).query_text;
  CHECK(q.size() <= kMaxQueryChars);
  CHECK(q.back() != ' ');
  CHECK(text.compare(0, q.size(), q) == 0);
  CHECK(text[q.size()] == ' ');
  // a single unbroken run is cut hard
  CHECK(build_query(clue(std::string(300, 'z'))).query_text.size() == kMaxQueryChars);
}

TEST_CASE("search cache persists and reloads") {
  const fs::path path = fs::temp_directory_path() / "devgeo_cache_test.jsonl";
  fs::remove(path);
  {
    SearchCache cache(path);
    CHECK_FALSE(cache.find("GICC bldg 3"));
    cache.put("GICC bldg 3", {"GICC bldg 3", {{"t", "s", "u"}}, "fixture", "2024-01-01T00:00:00Z"});
    CHECK(cache.size() == 1);
  }
  SearchCache reloaded(path);
  const auto hit = reloaded.find("gicc   BLDG 3");
  REQUIRE(hit);
  CHECK(hit->snippets.size() == 1);
  CHECK(hit->snippets[0].url == "u");
  CHECK(SearchCache::key_for("A b") == SearchCache::key_for(" a  B"));
}

TEST_CASE("augmenter uses the cache on the second call") {
  CountingBackend backend;
  SearchCache cache;
  Augmenter aug(backend, cache, fast_options(), fixed_clock);
  const auto q = build_query(clue("state street albany"));
  const auto first = aug.fetch(q);
  CHECK(first.backend_tag == "counting");
  CHECK(first.snippets.size() == 10);
  CHECK(first.retrieved_at == "2024-01-01T00:00:00Z");
  const auto second = aug.fetch(q);
  CHECK(second.backend_tag == "cache");
  CHECK(second.snippets.size() == 10);
  CHECK(backend.calls == 1);
}

TEST_CASE("augmenter retries transient failures") {
  CountingBackend flaky(3);
  SearchCache cache;
  Augmenter aug(flaky, cache, fast_options(), fixed_clock);
  CHECK(aug.fetch(build_query(clue("x"))).snippets.size() == 10);
  CHECK(flaky.calls == 4);

  CountingBackend broken(100);
  Augmenter gives_up(broken, cache, fast_options(), fixed_clock);
  CHECK_THROWS_AS(gives_up.fetch(build_query(clue("y"))), AugmentationUnavailable);
  CHECK(broken.calls == 4);
}

TEST_CASE("fetch_all keeps order, dedups and marks failures") {
  CountingBackend backend;
  SearchCache cache;
  auto opts = fast_options();
  opts.max_in_flight = 4;
  Augmenter aug(backend, cache, opts, fixed_clock);
  std::vector<SearchQuery> queries;
  for (int i = 0; i < 20; ++i) queries.push_back(build_query(clue("query " + std::to_string(i % 5))));
  const auto results = aug.fetch_all(queries);
  REQUIRE(results.size() == 20);
  for (std::size_t i = 0; i < results.size(); ++i) {
    REQUIRE(results[i]);
    CHECK(results[i]->query.query_text == queries[i].query_text);
  }
  CHECK(backend.calls == 5);

  NullSearchBackend null_backend;
  SearchCache empty;
  Augmenter none(null_backend, empty, fast_options(), fixed_clock);
  const auto failed = none.fetch_all({build_query(clue("z"))});
  REQUIRE(failed.size() == 1);
  CHECK_FALSE(failed[0]);
}

TEST_CASE("fixture backend looks up normalized queries") {
  FixtureSearchBackend fixture(std::map<std::string, std::vector<Snippet>>{{"gicc bldg 3", {{"a", "b", "c"}}}});
  CHECK(fixture.search("GICC  Bldg 3", 10).size() == 1);
  CHECK(fixture.search("unknown", 10).empty());
}

TEST_CASE("search responses in either shape") {
  const auto plain = parse_search_response(R"({"results":[{"title":"T","snippet":"S","url":"U"}]})");
  REQUIRE(plain.size() == 1);
  CHECK(plain[0].title == "T");
  const auto bing = parse_search_response(R"({"webPages":{"value":[{"name":"N","snippet":"S","url":"U"}]}})");
  REQUIRE(bing.size() == 1);
  CHECK(bing[0].title == "N");
  CHECK_THROWS_AS(parse_search_response("not json"), BackendError);
}

TEST_CASE("rate limiter spaces requests") {
  RateLimiter limiter(50.0, 1.0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 6; ++i) limiter.acquire();
  const auto elapsed = std::chrono::steady_clock::now() - start;
  CHECK(elapsed >= std::chrono::milliseconds(90));
}
