#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "devgeo/cluemine.hpp"

namespace devgeo {

inline constexpr std::size_t kMaxQueryChars = 256;

struct QueryOrigin {
  int cluster_id = 0;
  std::string page_id;
  std::string path;
};

struct SearchQuery {
  std::string query_text;
  QueryOrigin origin;
};

struct Snippet {
  std::string title;
  std::string snippet;
  std::string url;

  friend bool operator==(const Snippet&, const Snippet&) = default;
};

struct Augmentation {
  SearchQuery query;
  std::vector<Snippet> snippets;
  std::string backend_tag;
  std::string retrieved_at;
};

/// Control characters removed (whitespace controls become spaces), then cut
/// to at most 256 code points on a word boundary. Throws QuerySkipped when
/// nothing printable remains.
SearchQuery build_query(const ClueRecord& clue);

/// Key under which a query is cached and looked up in fixtures.
std::string normalized_query(std::string_view query_text);

class SearchBackend {
 public:
  virtual ~SearchBackend() = default;
  /// Ordered results; throws BackendError when the attempt fails.
  virtual std::vector<Snippet> search(std::string_view query, std::size_t max_results) = 0;
  virtual std::string tag() const = 0;
};

/// JSON map: normalized query -> [{title, snippet, url}]. Unknown queries
/// return no results.
class FixtureSearchBackend : public SearchBackend {
 public:
  explicit FixtureSearchBackend(const std::filesystem::path& path);
  explicit FixtureSearchBackend(std::map<std::string, std::vector<Snippet>> table);

  std::vector<Snippet> search(std::string_view query, std::size_t max_results) override;
  std::string tag() const override { return "fixture"; }

 private:
  std::map<std::string, std::vector<Snippet>> table_;
};

/// Always unavailable; for runs without search augmentation.
class NullSearchBackend : public SearchBackend {
 public:
  std::vector<Snippet> search(std::string_view query, std::size_t max_results) override;
  std::string tag() const override { return "null"; }
};

/// Generic JSON search API. Sends GET endpoint?q=..&count=.. with the key in
/// an Authorization bearer header. Accepts {"results":[{title,snippet,url}]}
/// or a Bing-style {"webPages":{"value":[{name,snippet,url}]}} body.
class HttpSearchBackend : public SearchBackend {
 public:
  HttpSearchBackend(std::string endpoint, std::string api_key,
                    std::chrono::milliseconds timeout = std::chrono::seconds(10));
  /// Reads SEARCH_API_ENDPOINT and SEARCH_API_KEY; throws ConfigError if
  /// the endpoint is unset.
  static std::unique_ptr<HttpSearchBackend> from_env();

  std::vector<Snippet> search(std::string_view query, std::size_t max_results) override;
  std::string tag() const override { return "http"; }

 private:
  std::string endpoint_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

std::vector<Snippet> parse_search_response(std::string_view body);

/// Query cache persisted as JSON lines; concurrent lookups, serialized
/// appends. With an empty path it lives in memory only.
class SearchCache {
 public:
  struct Entry {
    std::string query;
    std::vector<Snippet> snippets;
    std::string backend_tag;
    std::string retrieved_at;
  };

  explicit SearchCache(std::filesystem::path path = {});

  std::optional<Entry> find(std::string_view query_text) const;
  void put(std::string_view query_text, const Entry& entry);
  std::size_t size() const;

  static std::string key_for(std::string_view query_text);

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry> entries_;  // keyed by query hash
};

/// Token bucket; `rate_per_second <= 0` disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double rate_per_second = 1.0, double burst = 1.0);
  void acquire();

 private:
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mutex_;
};

struct AugmenterOptions {
  std::size_t max_snippets = 10;
  int retries = 3;  // attempts after the first failure
  std::chrono::milliseconds backoff{200};
  double requests_per_second = 1.0;
  std::size_t max_in_flight = 4;
};

std::string utc_timestamp_now();

class Augmenter {
 public:
  Augmenter(SearchBackend& backend, SearchCache& cache, AugmenterOptions options = {},
            std::function<std::string()> clock = utc_timestamp_now);

  /// Cache first, then the backend. Throws AugmentationUnavailable once all
  /// attempts fail.
  Augmentation fetch(const SearchQuery& query);

  /// Fetches with bounded concurrency. Results align with `queries`;
  /// nullopt marks an unavailable augmentation.
  std::vector<std::optional<Augmentation>> fetch_all(const std::vector<SearchQuery>& queries);

 private:
  SearchBackend& backend_;
  SearchCache& cache_;
  AugmenterOptions options_;
  std::function<std::string()> clock_;
  RateLimiter limiter_;
  std::mutex inflight_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;
};

}  // namespace devgeo
