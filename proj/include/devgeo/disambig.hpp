#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "devgeo/ensemble.hpp"
#include "devgeo/net.hpp"

namespace devgeo {

struct AdminArea {
  std::string country;  // ISO 3166-1 alpha-2, upper case
  std::string region;
  std::string city;
};

struct CoordinateCandidate {
  std::string entity;
  double lat = 0.0;
  double lon = 0.0;
  AdminArea admin;
  std::string source;
};

class Geocoder {
 public:
  virtual ~Geocoder() = default;
  /// Ranked candidates; throws BackendError when the attempt fails.
  virtual std::vector<CoordinateCandidate> lookup(std::string_view entity) = 0;
  virtual std::string tag() const = 0;
};

/// JSON map: canonical entity -> [{lat, lon, country, region, city}].
class FixtureGeocoder : public Geocoder {
 public:
  explicit FixtureGeocoder(const std::filesystem::path& path);
  explicit FixtureGeocoder(std::map<std::string, std::vector<CoordinateCandidate>> table);
  std::vector<CoordinateCandidate> lookup(std::string_view entity) override;
  std::string tag() const override { return "fixture"; }

 private:
  std::map<std::string, std::vector<CoordinateCandidate>> table_;
};

class NullGeocoder : public Geocoder {
 public:
  std::vector<CoordinateCandidate> lookup(std::string_view entity) override;
  std::string tag() const override { return "null"; }
};

/// GET endpoint?q=<entity>&key=<key>, expecting the fixture schema as a JSON
/// array (optionally under "results").
class HttpGeocoder : public Geocoder {
 public:
  HttpGeocoder(std::string endpoint, std::string api_key,
               std::chrono::milliseconds timeout = std::chrono::seconds(10));
  /// GEOCODER_ENDPOINT / GEOCODER_API_KEY; throws ConfigError if unset.
  static std::unique_ptr<HttpGeocoder> from_env();
  std::vector<CoordinateCandidate> lookup(std::string_view entity) override;
  std::string tag() const override { return "http"; }

 private:
  std::string endpoint_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

/// Parses the geocoder candidate array; entries with out-of-range
/// coordinates are dropped.
std::vector<CoordinateCandidate> parse_geocoder_candidates(const std::string& entity, std::string_view json_text,
                                                           const std::string& source);

/// Canonicalizes the entity and queries the backend, retrying `retries`
/// times. Throws GeocodeUnavailable once every attempt fails.
std::vector<CoordinateCandidate> geocode_entity(std::string_view entity, Geocoder& geocoder, int retries = 3);

struct IpGeoRecord {
  std::string ip;
  std::string provider;
  std::optional<std::string> country;
  std::optional<std::string> region;
  std::optional<std::string> city;
};

/// One provider's CIDR -> location table with longest-prefix lookup.
class IpProviderTable {
 public:
  struct Row {
    std::optional<std::string> country;
    std::optional<std::string> region;
    std::optional<std::string> city;
  };

  explicit IpProviderTable(std::string provider) : provider_(std::move(provider)) {}

  /// CSV `cidr,country,region,city`; provider name is the file stem. An
  /// optional header row is skipped. Bad rows are skipped and reported via
  /// `diagnostics`. Throws ConfigError if the file cannot be read.
  static IpProviderTable load_csv(const std::filesystem::path& path, std::vector<std::string>* diagnostics = nullptr);

  void insert(const net::Cidr& cidr, Row row) { rows_.insert(cidr, std::move(row)); }
  std::optional<IpGeoRecord> lookup(std::string_view ip) const;
  const std::string& provider() const { return provider_; }
  std::size_t size() const { return rows_.size(); }

 private:
  std::string provider_;
  net::PrefixMap<Row> rows_;
};

std::vector<IpGeoRecord> resolve_ip_region(std::string_view ip, const std::vector<IpProviderTable>& providers);

struct RegionConstraint {
  std::optional<std::string> country;
  std::optional<std::string> region;
  std::optional<std::string> city;
  // granularity -> provider -> ballot (absent ballots omitted)
  std::map<std::string, std::map<std::string, std::string>> vote_detail;

  bool empty() const { return !country && !region && !city; }
};

/// Strict-majority vote at country, then region, then city. Lower levels
/// only count ballots from providers that agree with the levels already
/// fixed; a level with no ballots is passed over and one without a strict
/// majority ends refinement.
RegionConstraint majority_vote(const std::vector<IpGeoRecord>& records);

enum class InferenceStatus { kResolved, kAmbiguous, kUnresolved };

std::string_view to_string(InferenceStatus s);

struct Disambiguation {
  std::optional<CoordinateCandidate> chosen;
  InferenceStatus status = InferenceStatus::kUnresolved;
  bool constraint_used = false;
};

Disambiguation disambiguate(const std::vector<CoordinateCandidate>& candidates, const RegionConstraint& constraint);

}  // namespace devgeo
