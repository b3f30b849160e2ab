#include <algorithm>
#include <fstream>
#include <sstream>

#include "devgeo/errors.hpp"
#include "devgeo/net.hpp"
#include "devgeo/pipeline.hpp"

namespace devgeo {

namespace fs = std::filesystem;

namespace {

struct AsnRow {
  std::string asn;
  std::string org;
};

net::PrefixMap<AsnRow> load_asn_table(const fs::path& path, std::vector<std::string>& notices) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read asn table " + path.string());
  net::PrefixMap<AsnRow> table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (lineno == 1 && !fields.empty() && fields[0] == "cidr") continue;
    if (fields.size() < 3) {
      notices.push_back("asn table line " + std::to_string(lineno) + ": expected cidr,asn,org_name");
      continue;
    }
    // org names may contain commas
    std::string org = fields[2];
    for (std::size_t i = 3; i < fields.size(); ++i) org += "," + fields[i];
    auto cidr = net::parse_cidr(fields[0]);
    if (!cidr) {
      notices.push_back("asn table line " + std::to_string(lineno) + ": bad cidr '" + fields[0] + "'");
      continue;
    }
    table.insert(*cidr, {fields[1], org});
  }
  return table;
}

template <typename K>
std::vector<std::pair<K, std::size_t>> sorted_desc(const std::map<K, std::size_t>& counts) {
  std::vector<std::pair<K, std::size_t>> rows(counts.begin(), counts.end());
  // stable on the key order already given by the map
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return rows;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

ReportBundle emit_report(const std::vector<GeoInference>& inferences, const fs::path* asn_table,
                         const fs::path& report_dir) {
  fs::create_directories(report_dir);
  ReportBundle bundle;

  std::map<std::string, std::size_t> countries;
  std::map<std::string, std::map<std::string, std::size_t>> cities;
  for (const auto& inf : inferences) {
    if (inf.status != InferenceStatus::kResolved || !inf.admin || inf.admin->country.empty()) continue;
    ++countries[inf.admin->country];
    if (!inf.admin->city.empty()) ++cities[inf.admin->country][inf.admin->city];
  }
  bundle.country_histogram = sorted_desc(countries);
  for (std::size_t i = 0; i < bundle.country_histogram.size() && i < 10; ++i) {
    const auto& country = bundle.country_histogram[i].first;
    auto top = sorted_desc(cities[country]);
    if (top.size() > 3) top.resize(3);
    bundle.top_cities.emplace_back(country, std::move(top));
  }

  bundle.stage_attribution = {{"keyword_resolved", 0}, {"llm_resolved", 0}, {"ambiguous", 0}, {"unresolved", 0},
                              {"no_clues", 0}};
  for (const auto& inf : inferences) {
    if (inf.stage == InferenceStage::kNone) {
      ++bundle.stage_attribution["no_clues"];
    } else if (inf.status == InferenceStatus::kResolved) {
      ++bundle.stage_attribution[inf.stage == InferenceStage::kKeyword ? "keyword_resolved" : "llm_resolved"];
    } else if (inf.status == InferenceStatus::kAmbiguous) {
      ++bundle.stage_attribution["ambiguous"];
    } else {
      ++bundle.stage_attribution["unresolved"];
    }
  }

  if (asn_table) {
    const auto table = load_asn_table(*asn_table, bundle.notices);
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (const auto& inf : inferences) {
      if (inf.status != InferenceStatus::kResolved) continue;
      const auto ip = net::parse_ip(inf.endpoint.ip);
      const AsnRow* row = ip ? table.lookup(*ip) : nullptr;
      ++counts[row ? std::pair{row->asn, row->org} : std::pair<std::string, std::string>{"unknown", ""}];
    }
    std::vector<std::tuple<std::string, std::string, std::size_t>> rows;
    for (const auto& [key, n] : sorted_desc(counts)) rows.emplace_back(key.first, key.second, n);
    bundle.as_histogram = std::move(rows);
  } else {
    bundle.notices.push_back("no asn table given; AS histogram omitted");
  }

  {
    auto out = open_csv(report_dir / "country_histogram.csv");
    out << "country,count\n";
    for (const auto& [c, n] : bundle.country_histogram) out << csv_field(c) << ',' << n << '\n';
  }
  {
    auto out = open_csv(report_dir / "top_cities.csv");
    out << "country,rank,city,count\n";
    for (const auto& [country, top] : bundle.top_cities) {
      for (std::size_t r = 0; r < top.size(); ++r) {
        out << csv_field(country) << ',' << r + 1 << ',' << csv_field(top[r].first) << ',' << top[r].second << '\n';
      }
    }
  }
  {
    auto out = open_csv(report_dir / "stage_attribution.csv");
    out << "outcome,count\n";
    for (const char* k : {"keyword_resolved", "llm_resolved", "ambiguous", "unresolved", "no_clues"}) {
      out << k << ',' << bundle.stage_attribution[k] << '\n';
    }
  }
  const fs::path as_path = report_dir / "as_histogram.csv";
  if (bundle.as_histogram) {
    auto out = open_csv(as_path);
    out << "asn,org_name,count\n";
    for (const auto& [asn, org, n] : *bundle.as_histogram) out << csv_field(asn) << ',' << csv_field(org) << ',' << n << '\n';
  } else {
    std::error_code ec;
    fs::remove(as_path, ec);
  }
  return bundle;
}

}  // namespace devgeo
