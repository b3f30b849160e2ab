#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "devgeo/disambig.hpp"
#include "devgeo/errors.hpp"

using namespace devgeo;
namespace fs = std::filesystem;

namespace {

IpGeoRecord ballot(std::string provider, std::optional<std::string> country, std::optional<std::string> region = {},
                   std::optional<std::string> city = {}) {
  return {"192.0.2.1", std::move(provider), std::move(country), std::move(region), std::move(city)};
}

CoordinateCandidate place(double lat, double lon, std::string cc, std::string region, std::string city) {
  return {"state street", lat, lon, {std::move(cc), std::move(region), std::move(city)}, "fixture"};
}

std::vector<CoordinateCandidate> state_street() {
  return {place(41.8819, -87.6278, "US", "illinois", "chicago"), place(42.3588, -71.0578, "US", "massachusetts", "boston"),
          place(42.6526, -73.7562, "US", "new york", "albany"), place(43.0747, -89.3884, "US", "wisconsin", "madison")};
}

class FlakyGeocoder : public Geocoder {
 public:
  explicit FlakyGeocoder(int failures) : failures_(failures) {}
  std::vector<CoordinateCandidate> lookup(std::string_view entity) override {
    ++calls;
    if (calls <= failures_) throw BackendError("timeout");
    return {place(1, 2, "US", "", std::string(entity))};
  }
  std::string tag() const override { return "flaky"; }
  int calls = 0;

 private:
  int failures_;
};

}  // namespace

TEST_CASE("majority vote at the country level") {
  const auto us = majority_vote({ballot("a", "US"), ballot("b", "US"), ballot("c", "US"), ballot("d", "DE")});
  CHECK(us.country == "US");
  const auto split = majority_vote({ballot("a", "US"), ballot("b", "US"), ballot("c", "DE"), ballot("d", "DE")});
  CHECK(split.empty());
  CHECK(split.vote_detail.at("country").size() == 4);
  CHECK(majority_vote({}).empty());
}

TEST_CASE("majority vote refines with consistent providers only") {
  const auto c = majority_vote({ballot("a", "us", "New York", "Albany"), ballot("b", "US", "new york", "Albany"),
                                ballot("c", "US", "New York", "New York"), ballot("d", "DE", "Berlin", "Berlin")});
  CHECK(c.country == "US");
  CHECK(c.region == "new york");
  CHECK(c.city == "albany");

  // region split stops refinement before city
  const auto stop = majority_vote({ballot("a", "US", "texas", "paris"), ballot("b", "US", "kentucky", "paris")});
  CHECK(stop.country == "US");
  CHECK_FALSE(stop.region);
  CHECK_FALSE(stop.city);

  // a level nobody reports is passed over
  const auto skip = majority_vote({ballot("a", "FR", std::nullopt, "paris"), ballot("b", "FR", std::nullopt, "paris")});
  CHECK_FALSE(skip.region);
  CHECK(skip.city == "paris");
}

TEST_CASE("state street resolves to the constraint city") {
  RegionConstraint albany;
  albany.country = "US";
  albany.city = "albany";
  const auto d = disambiguate(state_street(), albany);
  REQUIRE(d.chosen);
  CHECK(d.chosen->admin.city == "albany");
  CHECK(d.status == InferenceStatus::kResolved);
  CHECK(d.constraint_used);
}

TEST_CASE("disambiguation without a usable constraint") {
  const auto none = disambiguate(state_street(), RegionConstraint{});
  CHECK(none.status == InferenceStatus::kResolved);
  CHECK(none.chosen->admin.city == "chicago");
  CHECK_FALSE(none.constraint_used);

  RegionConstraint japan;
  japan.country = "JP";
  const auto miss = disambiguate(state_street(), japan);
  CHECK(miss.status == InferenceStatus::kAmbiguous);
  CHECK(miss.chosen->admin.city == "chicago");
  CHECK_FALSE(miss.constraint_used);

  const auto only = disambiguate({state_street()[1]}, japan);
  CHECK(only.status == InferenceStatus::kResolved);
  CHECK_FALSE(only.constraint_used);

  const auto empty = disambiguate({}, japan);
  CHECK(empty.status == InferenceStatus::kUnresolved);
  CHECK_FALSE(empty.chosen);
}

TEST_CASE("geocode_entity retries and canonicalizes") {
  FlakyGeocoder flaky(2);
  const auto found = geocode_entity("  Paris. ", flaky, 3);
  REQUIRE(found.size() == 1);
  CHECK(found[0].admin.city == "paris");
  CHECK(flaky.calls == 3);

  FlakyGeocoder dead(100);
  CHECK_THROWS_AS(geocode_entity("x", dead, 3), GeocodeUnavailable);
  CHECK(dead.calls == 4);
  CHECK(geocode_entity(" ... ", dead, 3).empty());
}

TEST_CASE("fixture geocoder drops invalid coordinates") {
  const fs::path p = fs::temp_directory_path() / "devgeo_geocoder.json";
  std::ofstream(p) << R"({"State Street": [{"lat": 41.9, "lon": -87.6, "country": "us", "city": "Chicago"},
                                           {"lat": 91, "lon": 0, "country": "US"}]})";
  FixtureGeocoder g(p);
  const auto c = g.lookup("state street.");
  REQUIRE(c.size() == 1);
  CHECK(c[0].admin.country == "US");
  CHECK(c[0].admin.city == "chicago");
  CHECK(g.lookup("elm street").empty());
}

TEST_CASE("provider tables answer with the longest prefix") {
  const fs::path p = fs::temp_directory_path() / "devgeo_provider.csv";
  std::ofstream(p) << "cidr,country,region,city\n10.0.0.0/8,US,,\n10.1.0.0/16,us,New York,Albany\nbad,US,,\n"
                      "10.2.0.0/16,USA,,\n2001:db8::/32,DE,Berlin,Berlin\n";
  std::vector<std::string> diagnostics;
  const auto table = IpProviderTable::load_csv(p, &diagnostics);
  CHECK(table.provider() == "devgeo_provider");
  CHECK(table.size() == 3);
  CHECK(diagnostics.size() == 2);
  const auto narrow = table.lookup("10.1.2.3");
  REQUIRE(narrow);
  CHECK(narrow->city == "albany");
  const auto broad = table.lookup("10.9.9.9");
  REQUIRE(broad);
  CHECK(broad->country == "US");
  CHECK_FALSE(broad->city);
  CHECK(table.lookup("2001:db8::5")->country == "DE");
  CHECK_FALSE(table.lookup("192.0.2.1"));
  CHECK_FALSE(table.lookup("garbage"));
  CHECK_THROWS_AS(IpProviderTable::load_csv(fs::temp_directory_path() / "nope.csv"), ConfigError);
}

TEST_CASE("resolve_ip_region collects one record per answering provider") {
  IpProviderTable a("a"), b("b");
  a.insert(*net::parse_cidr("192.0.2.0/24"), {"FR", std::nullopt, std::nullopt});
  const auto records = resolve_ip_region("192.0.2.7", {a, b});
  REQUIRE(records.size() == 1);
  CHECK(records[0].provider == "a");
}
