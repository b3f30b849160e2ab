#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "devgeo/augment.hpp"
#include "devgeo/cluemine.hpp"
#include "devgeo/cluster.hpp"
#include "devgeo/diffext.hpp"
#include "devgeo/disambig.hpp"
#include "devgeo/ensemble.hpp"
#include "devgeo/evalmetrics.hpp"

namespace devgeo {

enum class BackendKind { kFixture, kHttp, kNull };

std::string_view to_string(BackendKind k);
std::optional<BackendKind> parse_backend_kind(std::string_view s);

struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path output_dir = "out";
  int threshold = 40;
  ClusterAlgorithm algorithm = ClusterAlgorithm::kGreedy;
  GreedyJoinRule join_rule = GreedyJoinRule::kFirstWithinThreshold;
  std::optional<std::filesystem::path> keyword_file;

  BackendKind search_backend = BackendKind::kFixture;
  std::optional<std::filesystem::path> search_fixture;
  std::optional<std::filesystem::path> search_cache;  // default: <out>/search_cache.jsonl
  double search_rate = 1.0;                           // requests per second, <= 0 disables
  std::size_t max_snippets = 10;
  int retries = 3;
  int backoff_ms = 200;

  std::optional<std::filesystem::path> model_roster;
  std::size_t prompt_token_budget = kDefaultPromptTokenBudget;

  BackendKind geocoder_backend = BackendKind::kFixture;
  std::optional<std::filesystem::path> geocoder_fixture;
  bool geo_constraint = true;
  std::vector<std::filesystem::path> provider_tables;

  std::optional<std::filesystem::path> asn_table;
  std::optional<std::filesystem::path> gold;
  std::vector<int> sweep_thresholds = {20, 30, 40, 50, 60, 70, 80};
  unsigned jobs = 1;
};

/// JSON config; relative paths resolve against the config file's directory.
/// Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError for out-of-range values or referenced paths that do
/// not exist. Provider tables are only required when the constraint is on.
void validate_config(const PipelineConfig& config);

// ---- per-stage artifacts ---------------------------------------------------

struct PageSummary {
  std::string page_id;
  Endpoint endpoint;
  std::optional<StructuralDigest> digest;  // absent when unparseable
  std::size_t node_count = 0;
};

enum class InferenceStage { kNone, kKeyword, kLlm };
std::string_view to_string(InferenceStage s);

struct GeoInference {
  std::string page_id;
  Endpoint endpoint;
  std::optional<std::string> entity;
  std::optional<GeoLevel> level;
  std::optional<double> lat;
  std::optional<double> lon;
  std::optional<AdminArea> admin;
  bool constraint_used = false;
  InferenceStage stage = InferenceStage::kNone;
  InferenceStatus status = InferenceStatus::kUnresolved;
};

ExtractedLocation extracted_location(const GeoInference& inference);

struct IngestResult {
  std::vector<PageSummary> pages;
  std::size_t skipped = 0;
  std::size_t unparseable = 0;
};

struct MineResult {
  std::vector<ClueRecord> clues;
  std::vector<GeoInference> inferences;
};

struct ReportBundle {
  std::vector<std::pair<std::string, std::size_t>> country_histogram;  // descending
  // country -> up to three (city, count), for the ten largest countries
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::size_t>>>> top_cities;
  std::optional<std::vector<std::tuple<std::string, std::string, std::size_t>>> as_histogram;  // asn, org, count
  std::map<std::string, std::size_t> stage_attribution;
  std::vector<std::string> notices;
};

/// The stages below read their inputs from and write their outputs to
/// `config.output_dir`; errors that stop a stage surface as StageError.
IngestResult run_ingest(const PipelineConfig& config, std::ostream& log);
ClusterSet run_cluster(const PipelineConfig& config, std::ostream& log);
std::vector<DifferentialTextSet> run_diff(const PipelineConfig& config, std::ostream& log);
MineResult run_mine(const PipelineConfig& config, std::ostream& log);
ReportBundle run_report(const PipelineConfig& config, std::ostream& log);

/// All stages in order.
ReportBundle run_pipeline(const PipelineConfig& config, std::ostream& log);

struct SweepOutcome {
  std::vector<SweepRow> rows;
  std::size_t best = 0;
};

/// Greedy sweep over `config.sweep_thresholds` scored against the gold
/// class labels. Writes sweep.csv and sweep_best.txt.
SweepOutcome run_sweep(const PipelineConfig& config, std::ostream& log);

/// Extraction coverage/accuracy per level, plus clustering scores when the
/// gold file carries class labels. Writes eval/*.csv.
std::vector<ExtractionMetrics> run_eval(const PipelineConfig& config, std::ostream& log);

/// Histograms over resolved inferences and stage attribution over all.
ReportBundle emit_report(const std::vector<GeoInference>& inferences, const std::filesystem::path* asn_table,
                         const std::filesystem::path& report_dir);

// ---- artifact I/O ----------------------------------------------------------

void write_pages(const std::filesystem::path& path, const std::vector<PageSummary>& pages);
std::vector<PageSummary> read_pages(const std::filesystem::path& path);
void write_clusters(const std::filesystem::path& path, const ClusterSet& set);
ClusterSet read_clusters(const std::filesystem::path& path);
void write_diffs(const std::filesystem::path& path, const std::vector<DifferentialTextSet>& sets);
std::vector<DifferentialTextSet> read_diffs(const std::filesystem::path& path);
void write_inferences(const std::filesystem::path& path, const std::vector<GeoInference>& inferences);
std::vector<GeoInference> read_inferences(const std::filesystem::path& path);

std::string inference_to_json_line(const GeoInference& inference);

}  // namespace devgeo
