#include "devgeo/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "devgeo/errors.hpp"
#include "devgeo/net.hpp"
#include "devgeo/text.hpp"

namespace devgeo {

using nlohmann::json;

namespace {

bool is_control_byte(unsigned char c) { return c < 0x20 || c == 0x7F; }

json snippets_to_json(const std::vector<Snippet>& snippets) {
  json arr = json::array();
  for (const auto& s : snippets) arr.push_back({{"title", s.title}, {"snippet", s.snippet}, {"url", s.url}});
  return arr;
}

std::vector<Snippet> snippets_from_json(const json& arr, const char* title_key = "title") {
  std::vector<Snippet> out;
  if (!arr.is_array()) return out;
  for (const auto& item : arr) {
    if (!item.is_object()) continue;
    Snippet s;
    s.title = item.value(title_key, std::string());
    s.snippet = item.value("snippet", std::string());
    s.url = item.value("url", std::string());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

SearchQuery build_query(const ClueRecord& clue) {
  // C1 controls (U+0080..U+009F) arrive as C2 80..C2 9F in UTF-8
  std::string cleaned;
  const std::string text = sanitize_utf8(clue.text);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == 0xC2 && i + 1 < text.size()) {
      const auto next = static_cast<unsigned char>(text[i + 1]);
      if (next >= 0x80 && next <= 0x9F) {
        ++i;
        continue;
      }
    }
    if (c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
      cleaned.push_back(' ');
    } else if (!is_control_byte(c)) {
      cleaned.push_back(static_cast<char>(c));
    }
  }
  cleaned = collapse_whitespace(cleaned);
  if (cleaned.empty()) throw QuerySkipped("no printable text for query from page " + clue.page_id);

  if (utf8_length(cleaned) > kMaxQueryChars) {
    const std::string head = utf8_prefix(cleaned, kMaxQueryChars);
    const bool boundary_next = cleaned.size() > head.size() && cleaned[head.size()] == ' ';
    if (boundary_next) {
      cleaned = head;
    } else {
      const auto last_space = head.rfind(' ');
      cleaned = last_space == std::string::npos ? head : head.substr(0, last_space);
    }
    cleaned = collapse_whitespace(cleaned);
  }

  SearchQuery q;
  q.query_text = std::move(cleaned);
  q.origin = {clue.cluster_id, clue.page_id, clue.path};
  return q;
}

std::string normalized_query(std::string_view query_text) { return normalize_text(query_text); }

FixtureSearchBackend::FixtureSearchBackend(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read search fixture " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("search fixture " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("search fixture must be a JSON object");
  for (const auto& [key, value] : doc.items()) table_[normalized_query(key)] = snippets_from_json(value);
}

FixtureSearchBackend::FixtureSearchBackend(std::map<std::string, std::vector<Snippet>> table) {
  for (auto& [key, value] : table) table_[normalized_query(key)] = std::move(value);
}

std::vector<Snippet> FixtureSearchBackend::search(std::string_view query, std::size_t max_results) {
  auto it = table_.find(normalized_query(query));
  if (it == table_.end()) return {};
  std::vector<Snippet> out = it->second;
  if (out.size() > max_results) out.resize(max_results);
  return out;
}

std::vector<Snippet> NullSearchBackend::search(std::string_view, std::size_t) {
  throw BackendError("search backend disabled");
}

HttpSearchBackend::HttpSearchBackend(std::string endpoint, std::string api_key, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_(timeout) {}

std::unique_ptr<HttpSearchBackend> HttpSearchBackend::from_env() {
  const char* endpoint = std::getenv("SEARCH_API_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') throw ConfigError("SEARCH_API_ENDPOINT is not set");
  const char* key = std::getenv("SEARCH_API_KEY");
  return std::make_unique<HttpSearchBackend>(endpoint, key ? key : "");
}

std::vector<Snippet> parse_search_response(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw BackendError(std::string("unparseable search response: ") + e.what());
  }
  if (doc.contains("results")) return snippets_from_json(doc["results"]);
  if (doc.contains("webPages") && doc["webPages"].contains("value")) {
    return snippets_from_json(doc["webPages"]["value"], "name");
  }
  throw BackendError("search response has no results array");
}

std::vector<Snippet> HttpSearchBackend::search(std::string_view query, std::size_t max_results) {
  net::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  net::HttpResponse res;
  try {
    res = net::http_get(endpoint_, {{"q", std::string(query)}, {"count", std::to_string(max_results)}}, headers,
                        timeout_);
  } catch (const std::exception& e) {
    throw BackendError(e.what());
  }
  if (res.status < 200 || res.status >= 300) throw BackendError("search API returned HTTP " + std::to_string(res.status));
  auto snippets = parse_search_response(res.body);
  if (snippets.size() > max_results) snippets.resize(max_results);
  return snippets;
}

SearchCache::SearchCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty()) return;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Entry e;
      e.query = j.at("query").get<std::string>();
      e.snippets = snippets_from_json(j.at("snippets"));
      e.backend_tag = j.value("backend_tag", std::string());
      e.retrieved_at = j.value("retrieved_at", std::string());
      entries_[j.at("query_hash").get<std::string>()] = std::move(e);
    } catch (const json::exception&) {
      // a torn final line from an interrupted append is ignored
    }
  }
}

std::string SearchCache::key_for(std::string_view query_text) { return sha256_hex(normalized_query(query_text)); }

std::optional<SearchCache::Entry> SearchCache::find(std::string_view query_text) const {
  const std::string key = key_for(query_text);
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void SearchCache::put(std::string_view query_text, const Entry& entry) {
  const std::string key = key_for(query_text);
  std::unique_lock lock(mutex_);
  entries_[key] = entry;
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  const json line = {{"query_hash", key},
                     {"query", entry.query},
                     {"snippets", snippets_to_json(entry.snippets)},
                     {"backend_tag", entry.backend_tag},
                     {"retrieved_at", entry.retrieved_at}};
  out << line.dump() << '\n';
}

std::size_t SearchCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

RateLimiter::RateLimiter(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0) return;
  std::unique_lock lock(mutex_);
  while (true) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait = (1.0 - tokens_) / rate_;
    std::this_thread::sleep_for(std::chrono::duration<double>(wait));
  }
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

Augmenter::Augmenter(SearchBackend& backend, SearchCache& cache, AugmenterOptions options,
                     std::function<std::string()> clock)
    : backend_(backend),
      cache_(cache),
      options_(options),
      clock_(std::move(clock)),
      limiter_(options.requests_per_second, 1.0) {}

Augmentation Augmenter::fetch(const SearchQuery& query) {
  std::shared_ptr<std::mutex> key_lock;
  {
    std::lock_guard guard(inflight_mutex_);
    auto& slot = key_locks_[SearchCache::key_for(query.query_text)];
    if (!slot) slot = std::make_shared<std::mutex>();
    key_lock = slot;
  }
  std::lock_guard per_key(*key_lock);

  if (auto hit = cache_.find(query.query_text)) {
    Augmentation aug;
    aug.query = query;
    aug.snippets = std::move(hit->snippets);
    if (aug.snippets.size() > options_.max_snippets) aug.snippets.resize(options_.max_snippets);
    aug.backend_tag = "cache";
    aug.retrieved_at = hit->retrieved_at;
    return aug;
  }

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0 && options_.backoff.count() > 0) std::this_thread::sleep_for(options_.backoff * (1 << (attempt - 1)));
    limiter_.acquire();
    try {
      auto snippets = backend_.search(query.query_text, options_.max_snippets);
      if (snippets.size() > options_.max_snippets) snippets.resize(options_.max_snippets);
      Augmentation aug;
      aug.query = query;
      aug.snippets = std::move(snippets);
      aug.backend_tag = backend_.tag();
      aug.retrieved_at = clock_();
      cache_.put(query.query_text, {query.query_text, aug.snippets, aug.backend_tag, aug.retrieved_at});
      return aug;
    } catch (const BackendError& e) {
      last_error = e.what();
    }
  }
  throw AugmentationUnavailable("search failed for '" + query.query_text + "': " + last_error);
}

std::vector<std::optional<Augmentation>> Augmenter::fetch_all(const std::vector<SearchQuery>& queries) {
  std::vector<std::optional<Augmentation>> results(queries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < queries.size(); i = next++) {
      try {
        results[i] = fetch(queries[i]);
      } catch (const AugmentationUnavailable&) {
        results[i] = std::nullopt;
      }
    }
  };
  const std::size_t workers = std::min(std::max<std::size_t>(1, options_.max_in_flight), queries.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace devgeo
