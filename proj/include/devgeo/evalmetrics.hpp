#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "devgeo/cluster.hpp"
#include "devgeo/ensemble.hpp"

namespace devgeo {

/// Cluster assignment and true class per item, aligned by index.
class LabeledPartition {
 public:
  LabeledPartition(std::vector<int> clusters, std::vector<int> classes);
  /// Items present in both maps; throws std::invalid_argument if the key sets
  /// differ or are empty.
  static LabeledPartition from_maps(const std::map<std::string, int>& assignments,
                                    const std::map<std::string, std::string>& truths);

  std::size_t size() const { return clusters_.size(); }
  const std::vector<int>& clusters() const { return clusters_; }
  const std::vector<int>& classes() const { return classes_; }

 private:
  std::vector<int> clusters_;
  std::vector<int> classes_;
};

double purity(const LabeledPartition& p);

/// 0 when both partitions are trivial (denominator vanishes).
double adjusted_rand_index(const LabeledPartition& p);

struct InfoMetrics {
  double nmi = 0.0;
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
};

InfoMetrics info_metrics(const LabeledPartition& p);

struct GoldRecord {
  std::string page_id;
  std::string country;  // empty only on class-only records
  std::optional<std::string> city;
  std::optional<std::string> street;
  std::optional<std::string> class_label;  // template class for clustering evaluation
  std::vector<std::string> expected_diff_texts;
};

/// JSON lines; throws ConfigError on unreadable files or invalid records.
std::vector<GoldRecord> load_gold(const std::filesystem::path& path);

/// Location as extracted for one page.
struct ExtractedLocation {
  std::string page_id;
  std::optional<std::string> country;
  std::optional<std::string> city;
  std::optional<std::string> street;
};

struct ExtractionTally {
  std::size_t pages_total = 0;      // gold pages with a value at the level
  std::size_t pages_with_geo = 0;   // of those, pages with an extracted value
  std::size_t extracted = 0;
  std::size_t correct = 0;
};

struct ExtractionMetrics {
  GeoLevel level = GeoLevel::kCountry;
  ExtractionTally tally;
  double coverage = 0.0;            // percent
  std::optional<double> accuracy;   // percent; nullopt when nothing was extracted
};

/// Coverage and accuracy at one level, comparing canonicalized strings.
/// Throws std::invalid_argument if no gold record has a value at `level`.
ExtractionMetrics extraction_metrics(const std::vector<ExtractedLocation>& inferences,
                                     const std::vector<GoldRecord>& gold, GeoLevel level);

struct ClusteringScores {
  double purity = 0.0;
  double ari = 0.0;
  InfoMetrics info;
};

ClusteringScores clustering_scores(const LabeledPartition& p);

struct SweepRow {
  int threshold = 0;
  std::size_t total_clusters = 0;
  std::size_t valid_clusters = 0;  // size >= 2
  std::size_t singletons = 0;
  std::size_t true_classes = 0;
  ClusteringScores all;
  // same metrics with items in singleton clusters removed
  std::optional<ClusteringScores> without_singletons;
};

/// Greedy clustering at each threshold, scored against `truths`
/// (page_id -> class). Every digest needs a truth.
std::vector<SweepRow> threshold_sweep(const std::vector<DigestEntry>& digests,
                                      const std::map<std::string, std::string>& truths,
                                      const std::vector<int>& thresholds);

/// Index of the row with the highest V-measure; ties go to the smaller
/// threshold.
std::size_t best_sweep_row(const std::vector<SweepRow>& rows);

}  // namespace devgeo
