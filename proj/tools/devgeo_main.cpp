// devgeo: command-line driver for the geolocation pipeline.

#include <CLI11.hpp>
#include <iostream>

#include "devgeo/errors.hpp"
#include "devgeo/pipeline.hpp"
#include "devgeo/simd/hamming.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct Overrides {
  std::string config;
  std::string corpus;
  std::string out;
  std::optional<int> threshold;
  std::string algorithm;
  std::string join_rule;
  std::string keywords;
  std::string search_backend;
  std::string search_fixture;
  std::string search_cache;
  std::optional<double> search_rate;
  std::string model_roster;
  std::string geocoder_backend;
  std::string geocoder_fixture;
  std::string geo_constraint;
  std::vector<std::string> providers;
  std::string asn_table;
  std::string gold;
  std::vector<int> thresholds;
  std::optional<unsigned> jobs;
};

void add_flags(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--corpus", o.corpus, "manifest.jsonl or a directory holding one");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--threshold", o.threshold, "Hamming distance threshold (0-256)");
  app.add_option("--algorithm", o.algorithm, "greedy or hierarchical")
      ->check(CLI::IsMember({"greedy", "hierarchical"}));
  app.add_option("--join-rule", o.join_rule, "greedy join rule")->check(CLI::IsMember({"first", "nearest"}));
  app.add_option("--keywords", o.keywords, "keyword table file");
  app.add_option("--search-backend", o.search_backend)->check(CLI::IsMember({"fixture", "http", "null"}));
  app.add_option("--search-fixture", o.search_fixture);
  app.add_option("--search-cache", o.search_cache);
  app.add_option("--search-rate", o.search_rate, "search requests per second");
  app.add_option("--model-roster", o.model_roster);
  app.add_option("--geocoder-backend", o.geocoder_backend)->check(CLI::IsMember({"fixture", "http", "null"}));
  app.add_option("--geocoder-fixture", o.geocoder_fixture);
  app.add_option("--geo-constraint", o.geo_constraint)->check(CLI::IsMember({"on", "off"}));
  app.add_option("--providers", o.providers, "IP geolocation provider CSVs");
  app.add_option("--asn-table", o.asn_table, "cidr,asn,org_name CSV");
  app.add_option("--gold", o.gold, "gold labels (JSON lines)");
  app.add_option("--thresholds", o.thresholds, "sweep thresholds");
  app.add_option("--jobs", o.jobs, "worker threads");
}

devgeo::PipelineConfig build_config(const Overrides& o) {
  devgeo::PipelineConfig c = o.config.empty() ? devgeo::PipelineConfig{} : devgeo::load_config(o.config);
  if (!o.corpus.empty()) c.corpus = o.corpus;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.threshold) c.threshold = *o.threshold;
  if (!o.algorithm.empty()) c.algorithm = *devgeo::parse_cluster_algorithm(o.algorithm);
  if (!o.join_rule.empty()) {
    c.join_rule = o.join_rule == "nearest" ? devgeo::GreedyJoinRule::kNearestWithinThreshold
                                           : devgeo::GreedyJoinRule::kFirstWithinThreshold;
  }
  if (!o.keywords.empty()) c.keyword_file = o.keywords;
  if (!o.search_backend.empty()) c.search_backend = *devgeo::parse_backend_kind(o.search_backend);
  if (!o.search_fixture.empty()) c.search_fixture = o.search_fixture;
  if (!o.search_cache.empty()) c.search_cache = o.search_cache;
  if (o.search_rate) c.search_rate = *o.search_rate;
  if (!o.model_roster.empty()) c.model_roster = o.model_roster;
  if (!o.geocoder_backend.empty()) c.geocoder_backend = *devgeo::parse_backend_kind(o.geocoder_backend);
  if (!o.geocoder_fixture.empty()) c.geocoder_fixture = o.geocoder_fixture;
  if (!o.geo_constraint.empty()) c.geo_constraint = o.geo_constraint == "on";
  if (!o.providers.empty()) c.provider_tables.assign(o.providers.begin(), o.providers.end());
  if (!o.asn_table.empty()) c.asn_table = o.asn_table;
  if (!o.gold.empty()) c.gold = o.gold;
  if (!o.thresholds.empty()) c.sweep_thresholds = o.thresholds;
  if (o.jobs) c.jobs = *o.jobs;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural clustering and geolocation of device web pages"};
  app.require_subcommand(1);
  Overrides o;
  add_flags(app, o);
  for (auto* name : {"ingest", "cluster", "diff", "mine", "eval", "sweep", "report", "run"}) {
    app.add_subcommand(name)->fallthrough();
  }
  bool show_isa = false;
  app.add_flag("--show-isa", show_isa, "print the selected Hamming kernel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; any other usage error is a config error
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  if (show_isa) std::cerr << "hamming kernel: " << devgeo::simd::isa_name(devgeo::simd::active_kernels().isa) << '\n';

  try {
    const devgeo::PipelineConfig config = build_config(o);
    devgeo::validate_config(config);
    std::filesystem::create_directories(config.output_dir);
    auto& log = std::cerr;
    if (command == "ingest") devgeo::run_ingest(config, log);
    else if (command == "cluster") devgeo::run_cluster(config, log);
    else if (command == "diff") devgeo::run_diff(config, log);
    else if (command == "mine") devgeo::run_mine(config, log);
    else if (command == "report") devgeo::run_report(config, log);
    else if (command == "run") devgeo::run_pipeline(config, log);
    else if (command == "eval") devgeo::run_eval(config, log);
    else if (command == "sweep") {
      const auto outcome = devgeo::run_sweep(config, log);
      const auto& best = outcome.rows[outcome.best];
      std::cout << "best_threshold=" << best.threshold << " v_measure=" << best.all.info.v_measure << '\n';
    }
  } catch (const devgeo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const devgeo::StageError& e) {
    std::cerr << "stage " << e.stage() << " failed: " << e.what() << '\n';
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
