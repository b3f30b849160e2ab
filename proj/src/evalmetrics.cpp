#include "devgeo/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <stdexcept>

#include "devgeo/errors.hpp"
#include "devgeo/text.hpp"

namespace devgeo {

using nlohmann::json;

namespace {

struct Contingency {
  double n = 0;
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> cluster_sizes;
  std::map<int, double> class_sizes;
};

Contingency tabulate(const LabeledPartition& p) {
  Contingency t;
  t.n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int c = p.clusters()[i];
    const int k = p.classes()[i];
    t.cells[{c, k}] += 1;
    t.cluster_sizes[c] += 1;
    t.class_sizes[k] += 1;
  }
  return t;
}

double choose2(double x) { return x * (x - 1) / 2; }

double entropy(const std::map<int, double>& sizes, double n) {
  double h = 0.0;
  for (const auto& [label, count] : sizes) {
    const double p = count / n;
    h -= p * std::log(p);
  }
  return h;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

LabeledPartition::LabeledPartition(std::vector<int> clusters, std::vector<int> classes)
    : clusters_(std::move(clusters)), classes_(std::move(classes)) {
  if (clusters_.size() != classes_.size()) throw std::invalid_argument("partition label vectors differ in length");
  if (clusters_.empty()) throw std::invalid_argument("partition must contain at least one item");
}

LabeledPartition LabeledPartition::from_maps(const std::map<std::string, int>& assignments,
                                             const std::map<std::string, std::string>& truths) {
  if (assignments.size() != truths.size()) throw std::invalid_argument("assignment and truth key sets differ");
  std::map<std::string, int> class_ids;
  std::vector<int> clusters, classes;
  for (const auto& [item, cluster] : assignments) {
    auto t = truths.find(item);
    if (t == truths.end()) throw std::invalid_argument("no truth for item " + item);
    auto [it, inserted] = class_ids.emplace(t->second, static_cast<int>(class_ids.size()));
    clusters.push_back(cluster);
    classes.push_back(it->second);
  }
  return LabeledPartition(std::move(clusters), std::move(classes));
}

double purity(const LabeledPartition& p) {
  const auto t = tabulate(p);
  std::map<int, double> best;
  for (const auto& [key, count] : t.cells) best[key.first] = std::max(best[key.first], count);
  double sum = 0.0;
  for (const auto& [cluster, count] : best) sum += count;
  return sum / t.n;
}

double adjusted_rand_index(const LabeledPartition& p) {
  const auto t = tabulate(p);
  double index = 0.0;
  for (const auto& [key, count] : t.cells) index += choose2(count);
  double sum_a = 0.0, sum_b = 0.0;
  for (const auto& [c, a] : t.cluster_sizes) sum_a += choose2(a);
  for (const auto& [k, b] : t.class_sizes) sum_b += choose2(b);
  const double total_pairs = choose2(t.n);
  const double expected = total_pairs > 0 ? sum_a * sum_b / total_pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return 0.0;
  return (index - expected) / denom;
}

InfoMetrics info_metrics(const LabeledPartition& p) {
  const auto t = tabulate(p);
  const double h_c = entropy(t.cluster_sizes, t.n);
  const double h_t = entropy(t.class_sizes, t.n);
  double h_t_given_c = 0.0, h_c_given_t = 0.0, mutual = 0.0;
  for (const auto& [key, n_ij] : t.cells) {
    const double a = t.cluster_sizes.at(key.first);
    const double b = t.class_sizes.at(key.second);
    const double p_ij = n_ij / t.n;
    h_t_given_c -= p_ij * std::log(n_ij / a);
    h_c_given_t -= p_ij * std::log(n_ij / b);
    mutual += p_ij * std::log(t.n * n_ij / (a * b));
  }

  InfoMetrics m;
  m.homogeneity = h_t == 0.0 ? 1.0 : clamp01(1.0 - h_t_given_c / h_t);
  m.completeness = h_c == 0.0 ? 1.0 : clamp01(1.0 - h_c_given_t / h_c);
  const double hc_sum = m.homogeneity + m.completeness;
  m.v_measure = hc_sum == 0.0 ? 0.0 : clamp01(2.0 * m.homogeneity * m.completeness / hc_sum);
  if (h_c == 0.0 && h_t == 0.0) {
    m.nmi = 1.0;
  } else if (h_c == 0.0 || h_t == 0.0) {
    m.nmi = 0.0;
  } else {
    m.nmi = clamp01(mutual / std::sqrt(h_c * h_t));
  }
  return m;
}

ClusteringScores clustering_scores(const LabeledPartition& p) {
  return {purity(p), adjusted_rand_index(p), info_metrics(p)};
}

std::vector<GoldRecord> load_gold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read gold file " + path.string());
  std::vector<GoldRecord> out;
  std::string line;
  std::size_t lineno = 0;
  auto opt = [](const json& j, const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) return std::nullopt;
    return j[key].get<std::string>();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      GoldRecord g;
      g.page_id = j.at("page_id").get<std::string>();
      g.country = j.value("country", std::string());
      g.city = opt(j, "city");
      g.street = opt(j, "street");
      g.class_label = opt(j, "class");
      if (j.contains("expected_diff_texts")) g.expected_diff_texts = j["expected_diff_texts"].get<std::vector<std::string>>();
      // class-only records label pages that carry no location
      if (g.country.empty() && (!g.class_label || g.city)) throw ConfigError("empty country");
      if (g.street && !g.city) throw ConfigError("street given without city");
      out.push_back(std::move(g));
    } catch (const std::exception& e) {
      throw ConfigError(path.filename().string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::optional<std::string> value_at(const GoldRecord& g, GeoLevel level) {
  switch (level) {
    case GeoLevel::kCountry:
      return g.country.empty() ? std::nullopt : std::optional<std::string>(g.country);
    case GeoLevel::kCity:
      return g.city;
    case GeoLevel::kStreet:
      return g.street;
  }
  return std::nullopt;
}

std::optional<std::string> value_at(const ExtractedLocation& e, GeoLevel level) {
  switch (level) {
    case GeoLevel::kCountry:
      return e.country;
    case GeoLevel::kCity:
      return e.city;
    case GeoLevel::kStreet:
      return e.street;
  }
  return std::nullopt;
}

}  // namespace

ExtractionMetrics extraction_metrics(const std::vector<ExtractedLocation>& inferences,
                                     const std::vector<GoldRecord>& gold, GeoLevel level) {
  std::map<std::string, const ExtractedLocation*> by_page;
  for (const auto& inf : inferences) by_page.emplace(inf.page_id, &inf);

  ExtractionMetrics m;
  m.level = level;
  for (const auto& g : gold) {
    const auto truth = value_at(g, level);
    if (!truth) continue;
    ++m.tally.pages_total;
    auto it = by_page.find(g.page_id);
    if (it == by_page.end()) continue;
    const auto got = value_at(*it->second, level);
    if (!got || got->empty()) continue;
    ++m.tally.pages_with_geo;
    ++m.tally.extracted;
    if (canonicalize_entity(*got) == canonicalize_entity(*truth)) ++m.tally.correct;
  }
  if (m.tally.pages_total == 0) throw std::invalid_argument("no gold records at level " + std::string(to_string(level)));
  m.coverage = 100.0 * static_cast<double>(m.tally.pages_with_geo) / static_cast<double>(m.tally.pages_total);
  if (m.tally.extracted > 0) {
    m.accuracy = 100.0 * static_cast<double>(m.tally.correct) / static_cast<double>(m.tally.extracted);
  }
  return m;
}

std::vector<SweepRow> threshold_sweep(const std::vector<DigestEntry>& digests,
                                      const std::map<std::string, std::string>& truths,
                                      const std::vector<int>& thresholds) {
  std::map<std::string, std::string> relevant;
  for (const auto& d : digests) {
    auto it = truths.find(d.page_id);
    if (it == truths.end()) throw std::invalid_argument("no truth for page " + d.page_id);
    relevant.emplace(d.page_id, it->second);
  }
  std::set<std::string> classes;
  for (const auto& [id, cls] : relevant) classes.insert(cls);

  std::vector<SweepRow> rows;
  for (int theta : thresholds) {
    const ClusterSet set = cluster_greedy(digests, theta);
    SweepRow row;
    row.threshold = theta;
    row.total_clusters = set.clusters.size();
    row.singletons = set.singleton_count();
    row.valid_clusters = row.total_clusters - row.singletons;
    row.true_classes = classes.size();
    if (digests.empty()) {
      rows.push_back(row);
      continue;
    }
    const auto assignments = set.assignments();
    row.all = clustering_scores(LabeledPartition::from_maps(assignments, relevant));

    std::map<std::string, int> kept;
    std::map<std::string, std::string> kept_truths;
    for (const auto& c : set.clusters) {
      if (c.is_singleton()) continue;
      for (const auto& m : c.members) {
        kept[m] = c.cluster_id;
        kept_truths[m] = relevant.at(m);
      }
    }
    if (!kept.empty()) row.without_singletons = clustering_scores(LabeledPartition::from_maps(kept, kept_truths));
    rows.push_back(row);
  }
  return rows;
}

std::size_t best_sweep_row(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("empty sweep");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double v = rows[i].all.info.v_measure;
    const double b = rows[best].all.info.v_measure;
    if (v > b || (v == b && rows[i].threshold < rows[best].threshold)) best = i;
  }
  return best;
}

}  // namespace devgeo
