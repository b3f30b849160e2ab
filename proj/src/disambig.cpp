#include "devgeo/disambig.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "devgeo/errors.hpp"
#include "devgeo/text.hpp"

namespace devgeo {

using nlohmann::json;

namespace {

std::string upper_ascii(std::string_view s) {
  std::string out = collapse_whitespace(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

bool is_alpha2(std::string_view s) {
  return s.size() == 2 && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

std::optional<std::string> non_empty(std::string v) {
  if (v.empty()) return std::nullopt;
  return v;
}

CoordinateCandidate candidate_from_json(const std::string& entity, const json& item, const std::string& source) {
  CoordinateCandidate c;
  c.entity = entity;
  c.lat = item.at("lat").get<double>();
  c.lon = item.at("lon").get<double>();
  c.admin.country = upper_ascii(item.value("country", std::string()));
  c.admin.region = normalize_text(item.value("region", std::string()));
  c.admin.city = normalize_text(item.value("city", std::string()));
  c.source = source;
  return c;
}

bool valid_coordinates(const CoordinateCandidate& c) {
  return c.lat >= -90.0 && c.lat <= 90.0 && c.lon >= -180.0 && c.lon <= 180.0;
}

// CSV split without quoting support beyond stripping surrounding quotes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(collapse_whitespace(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(collapse_whitespace(cur));
  return fields;
}

// Value held by more than half of the ballots, if any.
std::optional<std::string> strict_majority(const std::map<std::string, std::string>& ballots) {
  std::map<std::string, std::size_t> counts;
  for (const auto& [provider, value] : ballots) ++counts[value];
  for (const auto& [value, n] : counts) {
    if (2 * n > ballots.size()) return value;
  }
  return std::nullopt;
}

}  // namespace

FixtureGeocoder::FixtureGeocoder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read geocoder fixture " + path.string());
  try {
    const json doc = json::parse(in);
    if (!doc.is_object()) throw ConfigError("geocoder fixture must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      const std::string entity = canonicalize_entity(key);
      auto& list = table_[entity];
      for (const auto& item : value) {
        auto c = candidate_from_json(entity, item, "fixture");
        if (valid_coordinates(c)) list.push_back(std::move(c));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("geocoder fixture " + path.string() + ": " + e.what());
  }
}

FixtureGeocoder::FixtureGeocoder(std::map<std::string, std::vector<CoordinateCandidate>> table) {
  for (auto& [key, value] : table) table_[canonicalize_entity(key)] = std::move(value);
}

std::vector<CoordinateCandidate> FixtureGeocoder::lookup(std::string_view entity) {
  auto it = table_.find(canonicalize_entity(entity));
  return it == table_.end() ? std::vector<CoordinateCandidate>{} : it->second;
}

std::vector<CoordinateCandidate> NullGeocoder::lookup(std::string_view) { throw BackendError("geocoder disabled"); }

HttpGeocoder::HttpGeocoder(std::string endpoint, std::string api_key, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_(timeout) {}

std::unique_ptr<HttpGeocoder> HttpGeocoder::from_env() {
  const char* endpoint = std::getenv("GEOCODER_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') throw ConfigError("GEOCODER_ENDPOINT is not set");
  const char* key = std::getenv("GEOCODER_API_KEY");
  return std::make_unique<HttpGeocoder>(endpoint, key ? key : "");
}

std::vector<CoordinateCandidate> parse_geocoder_candidates(const std::string& entity, std::string_view json_text,
                                                           const std::string& source) {
  std::vector<CoordinateCandidate> out;
  try {
    const json doc = json::parse(json_text);
    const json& list = doc.is_object() && doc.contains("results") ? doc["results"] : doc;
    if (!list.is_array()) throw BackendError("geocoder response is not a candidate list");
    for (const auto& item : list) {
      auto c = candidate_from_json(entity, item, source);
      if (valid_coordinates(c)) out.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw BackendError(std::string("unparseable geocoder response: ") + e.what());
  }
  return out;
}

std::vector<CoordinateCandidate> HttpGeocoder::lookup(std::string_view entity) {
  std::map<std::string, std::string> params{{"q", std::string(entity)}};
  if (!api_key_.empty()) params["key"] = api_key_;
  net::HttpResponse res;
  try {
    res = net::http_get(endpoint_, params, {}, timeout_);
  } catch (const std::exception& e) {
    throw BackendError(e.what());
  }
  if (res.status < 200 || res.status >= 300) throw BackendError("geocoder returned HTTP " + std::to_string(res.status));
  return parse_geocoder_candidates(std::string(entity), res.body, "http");
}

std::vector<CoordinateCandidate> geocode_entity(std::string_view entity, Geocoder& geocoder, int retries) {
  const std::string canonical = canonicalize_entity(entity);
  if (canonical.empty()) return {};
  std::string last_error;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    try {
      return geocoder.lookup(canonical);
    } catch (const BackendError& e) {
      last_error = e.what();
    }
  }
  throw GeocodeUnavailable("geocoding '" + canonical + "' failed: " + last_error);
}

IpProviderTable IpProviderTable::load_csv(const std::filesystem::path& path, std::vector<std::string>* diagnostics) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read provider table " + path.string());
  IpProviderTable table(path.stem().string());
  std::string line;
  std::size_t lineno = 0;
  auto report = [&](const std::string& msg) {
    if (diagnostics) diagnostics->push_back(path.filename().string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (lineno == 1 && to_lower_ascii(fields[0]) == "cidr") continue;
    if (fields.size() < 2) {
      report("expected cidr,country,region,city");
      continue;
    }
    const auto cidr = net::parse_cidr(fields[0]);
    if (!cidr) {
      report("bad cidr '" + fields[0] + "'");
      continue;
    }
    Row row;
    const std::string country = upper_ascii(fields[1]);
    if (!country.empty() && !is_alpha2(country)) {
      report("country '" + fields[1] + "' is not an ISO 3166-1 alpha-2 code");
      continue;
    }
    row.country = non_empty(country);
    if (fields.size() > 2) row.region = non_empty(normalize_text(fields[2]));
    if (fields.size() > 3) row.city = non_empty(normalize_text(fields[3]));
    table.insert(*cidr, std::move(row));
  }
  return table;
}

std::optional<IpGeoRecord> IpProviderTable::lookup(std::string_view ip) const {
  const auto addr = net::parse_ip(ip);
  if (!addr) return std::nullopt;
  const Row* row = rows_.lookup(*addr);
  if (row == nullptr) return std::nullopt;
  IpGeoRecord rec;
  rec.ip = std::string(ip);
  rec.provider = provider_;
  rec.country = row->country;
  rec.region = row->region;
  rec.city = row->city;
  return rec;
}

std::vector<IpGeoRecord> resolve_ip_region(std::string_view ip, const std::vector<IpProviderTable>& providers) {
  std::vector<IpGeoRecord> out;
  for (const auto& table : providers) {
    if (auto rec = table.lookup(ip)) out.push_back(std::move(*rec));
  }
  return out;
}

RegionConstraint majority_vote(const std::vector<IpGeoRecord>& records) {
  RegionConstraint constraint;
  // providers still consistent with every level fixed so far
  std::vector<const IpGeoRecord*> eligible;
  for (const auto& r : records) eligible.push_back(&r);

  using Field = std::optional<std::string> IpGeoRecord::*;
  const std::pair<const char*, Field> levels[] = {
      {"country", &IpGeoRecord::country}, {"region", &IpGeoRecord::region}, {"city", &IpGeoRecord::city}};
  std::optional<std::string>* targets[] = {&constraint.country, &constraint.region, &constraint.city};

  for (std::size_t level = 0; level < 3; ++level) {
    const auto [name, field] = levels[level];
    std::map<std::string, std::string> ballots;
    for (const IpGeoRecord* r : eligible) {
      const auto& v = r->*field;
      if (!v || v->empty()) continue;
      ballots[r->provider] = level == 0 ? upper_ascii(*v) : normalize_text(*v);
    }
    if (ballots.empty()) continue;
    constraint.vote_detail[name] = ballots;
    const auto winner = strict_majority(ballots);
    if (!winner) break;
    *targets[level] = *winner;
    std::vector<const IpGeoRecord*> agreeing;
    for (const IpGeoRecord* r : eligible) {
      const auto it = ballots.find(r->provider);
      if (it == ballots.end() || it->second == *winner) agreeing.push_back(r);
    }
    eligible = std::move(agreeing);
  }
  return constraint;
}

std::string_view to_string(InferenceStatus s) {
  switch (s) {
    case InferenceStatus::kResolved:
      return "resolved";
    case InferenceStatus::kAmbiguous:
      return "ambiguous";
    case InferenceStatus::kUnresolved:
      return "unresolved";
  }
  return "unresolved";
}

Disambiguation disambiguate(const std::vector<CoordinateCandidate>& candidates, const RegionConstraint& constraint) {
  Disambiguation out;
  if (candidates.empty()) return out;
  if (candidates.size() == 1) {
    out.chosen = candidates.front();
    out.status = InferenceStatus::kResolved;
    return out;
  }
  if (constraint.empty()) {
    out.chosen = candidates.front();
    out.status = InferenceStatus::kResolved;
    return out;
  }
  auto matches = [&](const CoordinateCandidate& c) {
    if (constraint.country && upper_ascii(c.admin.country) != *constraint.country) return false;
    if (constraint.region && normalize_text(c.admin.region) != *constraint.region) return false;
    if (constraint.city && normalize_text(c.admin.city) != *constraint.city) return false;
    return true;
  };
  auto it = std::find_if(candidates.begin(), candidates.end(), matches);
  if (it != candidates.end()) {
    out.chosen = *it;
    out.status = InferenceStatus::kResolved;
    out.constraint_used = true;
  } else {
    out.chosen = candidates.front();
    out.status = InferenceStatus::kAmbiguous;
  }
  return out;
}

}  // namespace devgeo
