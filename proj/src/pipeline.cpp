#include "devgeo/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "devgeo/corpus.hpp"
#include "devgeo/digest.hpp"
#include "devgeo/errors.hpp"
#include "devgeo/parallel.hpp"
#include "devgeo/text.hpp"

namespace devgeo {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::kFixture:
      return "fixture";
    case BackendKind::kHttp:
      return "http";
    case BackendKind::kNull:
      return "null";
  }
  return "null";
}

std::optional<BackendKind> parse_backend_kind(std::string_view s) {
  if (s == "fixture") return BackendKind::kFixture;
  if (s == "http") return BackendKind::kHttp;
  if (s == "null") return BackendKind::kNull;
  return std::nullopt;
}

std::string_view to_string(InferenceStage s) {
  switch (s) {
    case InferenceStage::kNone:
      return "none";
    case InferenceStage::kKeyword:
      return "keyword";
    case InferenceStage::kLlm:
      return "llm";
  }
  return "none";
}

// ---- configuration ---------------------------------------------------------

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  PipelineConfig c;
  try {
    if (j.contains("corpus")) c.corpus = resolve(j["corpus"].get<std::string>());
    if (j.contains("output_dir")) c.output_dir = resolve(j["output_dir"].get<std::string>());
    c.threshold = j.value("threshold", c.threshold);
    if (j.contains("algorithm")) {
      auto a = parse_cluster_algorithm(j["algorithm"].get<std::string>());
      if (!a) throw ConfigError("unknown algorithm " + j["algorithm"].dump());
      c.algorithm = *a;
    }
    if (j.contains("join_rule")) {
      const auto rule = j["join_rule"].get<std::string>();
      if (rule == "first") c.join_rule = GreedyJoinRule::kFirstWithinThreshold;
      else if (rule == "nearest") c.join_rule = GreedyJoinRule::kNearestWithinThreshold;
      else throw ConfigError("unknown join_rule '" + rule + "'");
    }
    if (j.contains("keyword_file")) c.keyword_file = resolve(j["keyword_file"].get<std::string>());
    auto backend = [&](const char* key, BackendKind& out) {
      if (!j.contains(key)) return;
      auto k = parse_backend_kind(j[key].get<std::string>());
      if (!k) throw ConfigError(std::string("unknown ") + key + " " + j[key].dump());
      out = *k;
    };
    backend("search_backend", c.search_backend);
    backend("geocoder_backend", c.geocoder_backend);
    if (j.contains("search_fixture")) c.search_fixture = resolve(j["search_fixture"].get<std::string>());
    if (j.contains("search_cache")) c.search_cache = resolve(j["search_cache"].get<std::string>());
    c.search_rate = j.value("search_rate", c.search_rate);
    c.max_snippets = j.value("max_snippets", c.max_snippets);
    c.retries = j.value("retries", c.retries);
    c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
    if (j.contains("model_roster")) c.model_roster = resolve(j["model_roster"].get<std::string>());
    c.prompt_token_budget = j.value("prompt_token_budget", c.prompt_token_budget);
    if (j.contains("geocoder_fixture")) c.geocoder_fixture = resolve(j["geocoder_fixture"].get<std::string>());
    if (j.contains("geo_constraint")) {
      const auto& g = j["geo_constraint"];
      if (g.is_boolean()) c.geo_constraint = g.get<bool>();
      else if (g == "on") c.geo_constraint = true;
      else if (g == "off") c.geo_constraint = false;
      else throw ConfigError("geo_constraint must be on or off");
    }
    if (j.contains("provider_tables")) {
      for (const auto& p : j["provider_tables"]) c.provider_tables.push_back(resolve(p.get<std::string>()));
    }
    if (j.contains("asn_table")) c.asn_table = resolve(j["asn_table"].get<std::string>());
    if (j.contains("gold")) c.gold = resolve(j["gold"].get<std::string>());
    if (j.contains("sweep_thresholds")) c.sweep_thresholds = j["sweep_thresholds"].get<std::vector<int>>();
    c.jobs = j.value("jobs", c.jobs);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return c;
}

void validate_config(const PipelineConfig& c) {
  auto require = [](const fs::path& p, const std::string& what) {
    std::error_code ec;
    if (!fs::exists(p, ec)) throw ConfigError(what + " not found: " + p.string());
  };
  if (c.threshold < 0 || c.threshold > kDigestBits) throw ConfigError("threshold must lie in [0, 256]");
  if (c.corpus.empty()) throw ConfigError("no corpus given");
  require(c.corpus, "corpus");
  if (c.keyword_file) require(*c.keyword_file, "keyword file");
  if (c.search_fixture) require(*c.search_fixture, "search fixture");
  if (c.model_roster) require(*c.model_roster, "model roster");
  if (c.geocoder_fixture) require(*c.geocoder_fixture, "geocoder fixture");
  if (c.geo_constraint) {
    for (const auto& p : c.provider_tables) require(p, "provider table");
  }
  if (c.asn_table) require(*c.asn_table, "asn table");
  if (c.gold) require(*c.gold, "gold file");
  for (int t : c.sweep_thresholds) {
    if (t < 0 || t > kDigestBits) throw ConfigError("sweep threshold out of range: " + std::to_string(t));
  }
  if (c.jobs == 0) throw ConfigError("jobs must be at least 1");
}

// ---- artifact I/O ----------------------------------------------------------

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

template <typename Fn>
void for_each_json_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw std::runtime_error(path.filename().string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

NodePath parse_node_path(const std::string& s) {
  NodePath path;
  std::istringstream in(s);
  std::string step;
  while (std::getline(in, step, '/')) {
    const auto open = step.find('[');
    if (open == std::string::npos || step.back() != ']') throw std::runtime_error("bad node path '" + s + "'");
    path.steps.push_back({step.substr(0, open), std::stoi(step.substr(open + 1, step.size() - open - 2))});
  }
  return path;
}

json hits_to_json(const std::vector<KeywordHit>& hits) {
  json arr = json::array();
  for (const auto& h : hits) arr.push_back({{"keyword", h.keyword}, {"category", h.category}, {"offset", h.offset}});
  return arr;
}

}  // namespace

void write_pages(const fs::path& path, const std::vector<PageSummary>& pages) {
  auto out = open_out(path);
  for (const auto& p : pages) {
    json j = {{"page_id", p.page_id}, {"ip", p.endpoint.ip}, {"port", p.endpoint.port}, {"node_count", p.node_count}};
    j["digest"] = p.digest ? json(p.digest->to_hex()) : json(nullptr);
    out << j.dump() << '\n';
  }
}

std::vector<PageSummary> read_pages(const fs::path& path) {
  std::vector<PageSummary> pages;
  for_each_json_line(path, [&](const json& j) {
    PageSummary p;
    p.page_id = j.at("page_id").get<std::string>();
    p.endpoint.ip = j.at("ip").get<std::string>();
    p.endpoint.port = j.at("port").get<std::uint16_t>();
    p.node_count = j.value("node_count", std::size_t{0});
    if (j.contains("digest") && j["digest"].is_string()) {
      p.digest = StructuralDigest::from_hex(j["digest"].get<std::string>());
      if (!p.digest) throw std::runtime_error("bad digest for page " + p.page_id);
    }
    pages.push_back(std::move(p));
  });
  return pages;
}

void write_clusters(const fs::path& path, const ClusterSet& set) {
  auto out = open_out(path);
  for (const auto& c : set.clusters) {
    json j = {{"cluster_id", c.cluster_id}, {"algorithm", std::string(to_string(set.algorithm))}};
    if (set.algorithm == ClusterAlgorithm::kGreedy && set.distance_threshold) {
      j["threshold"] = *set.distance_threshold;
    } else {
      j["threshold"] = set.similarity_threshold;
    }
    j["representative_hex"] = c.representative.to_hex();
    j["members"] = c.members;
    j["is_singleton"] = c.is_singleton();
    out << j.dump() << '\n';
  }
}

ClusterSet read_clusters(const fs::path& path) {
  ClusterSet set;
  for_each_json_line(path, [&](const json& j) {
    Cluster c;
    c.cluster_id = j.at("cluster_id").get<int>();
    auto rep = StructuralDigest::from_hex(j.at("representative_hex").get<std::string>());
    if (!rep) throw std::runtime_error("bad representative digest");
    c.representative = *rep;
    c.members = j.at("members").get<std::vector<std::string>>();
    auto algo = parse_cluster_algorithm(j.at("algorithm").get<std::string>());
    if (!algo) throw std::runtime_error("unknown algorithm");
    set.algorithm = *algo;
    if (set.algorithm == ClusterAlgorithm::kGreedy) {
      set.distance_threshold = j.at("threshold").get<int>();
      set.similarity_threshold = similarity_threshold_for_distance(*set.distance_threshold);
    } else {
      set.similarity_threshold = j.at("threshold").get<double>();
    }
    set.clusters.push_back(std::move(c));
  });
  return set;
}

void write_diffs(const fs::path& path, const std::vector<DifferentialTextSet>& sets) {
  auto out = open_out(path);
  for (const auto& set : sets) {
    for (const auto& e : set.entries) {
      const json j = {{"cluster_id", set.cluster_id},
                      {"page_id", e.page_id},
                      {"path", e.path.to_string()},
                      {"text", e.text},
                      {"truncated", e.truncated()}};
      out << j.dump() << '\n';
    }
  }
}

std::vector<DifferentialTextSet> read_diffs(const fs::path& path) {
  std::vector<DifferentialTextSet> sets;
  for_each_json_line(path, [&](const json& j) {
    const int cid = j.at("cluster_id").get<int>();
    if (sets.empty() || sets.back().cluster_id != cid) {
      sets.emplace_back();
      sets.back().cluster_id = cid;
    }
    sets.back().entries.push_back(
        {j.at("page_id").get<std::string>(), parse_node_path(j.at("path").get<std::string>()), j.at("text").get<std::string>()});
  });
  return sets;
}

std::string inference_to_json_line(const GeoInference& inf) {
  json j;
  j["page_id"] = inf.page_id;
  j["ip"] = inf.endpoint.ip;
  j["port"] = inf.endpoint.port;
  j["status"] = std::string(to_string(inf.status));
  j["stage"] = std::string(to_string(inf.stage));
  j["entity"] = inf.entity ? json(*inf.entity) : json(nullptr);
  j["level"] = inf.level ? json(std::string(to_string(*inf.level))) : json(nullptr);
  j["lat"] = inf.lat ? json(*inf.lat) : json(nullptr);
  j["lon"] = inf.lon ? json(*inf.lon) : json(nullptr);
  j["country"] = inf.admin ? json(inf.admin->country) : json(nullptr);
  j["region"] = inf.admin ? json(inf.admin->region) : json(nullptr);
  j["city"] = inf.admin ? json(inf.admin->city) : json(nullptr);
  j["constraint_used"] = inf.constraint_used;
  return j.dump();
}

void write_inferences(const fs::path& path, const std::vector<GeoInference>& inferences) {
  auto out = open_out(path);
  for (const auto& inf : inferences) out << inference_to_json_line(inf) << '\n';
}

std::vector<GeoInference> read_inferences(const fs::path& path) {
  std::vector<GeoInference> out;
  for_each_json_line(path, [&](const json& j) {
    GeoInference inf;
    inf.page_id = j.at("page_id").get<std::string>();
    inf.endpoint.ip = j.value("ip", std::string());
    inf.endpoint.port = j.value("port", std::uint16_t{0});
    const std::string status = j.at("status").get<std::string>();
    if (status == "resolved") inf.status = InferenceStatus::kResolved;
    else if (status == "ambiguous") inf.status = InferenceStatus::kAmbiguous;
    else inf.status = InferenceStatus::kUnresolved;
    const std::string stage = j.value("stage", std::string("none"));
    inf.stage = stage == "keyword" ? InferenceStage::kKeyword : stage == "llm" ? InferenceStage::kLlm : InferenceStage::kNone;
    if (j.contains("entity") && j["entity"].is_string()) inf.entity = j["entity"].get<std::string>();
    if (j.contains("level") && j["level"].is_string()) inf.level = parse_geo_level(j["level"].get<std::string>());
    if (j.contains("lat") && j["lat"].is_number()) inf.lat = j["lat"].get<double>();
    if (j.contains("lon") && j["lon"].is_number()) inf.lon = j["lon"].get<double>();
    if (j.contains("country") && j["country"].is_string()) {
      inf.admin = AdminArea{j["country"].get<std::string>(), j.value("region", std::string()),
                            j.value("city", std::string())};
    }
    inf.constraint_used = j.value("constraint_used", false);
    out.push_back(std::move(inf));
  });
  return out;
}

ExtractedLocation extracted_location(const GeoInference& inf) {
  ExtractedLocation loc;
  loc.page_id = inf.page_id;
  if (inf.status == InferenceStatus::kUnresolved) return loc;
  if (inf.admin) {
    if (!inf.admin->country.empty()) loc.country = inf.admin->country;
    if (!inf.admin->city.empty()) loc.city = inf.admin->city;
  }
  if (inf.level == GeoLevel::kStreet && inf.entity) loc.street = *inf.entity;
  return loc;
}

// ---- stages ----------------------------------------------------------------

namespace {

fs::path artifact(const PipelineConfig& c, const char* name) { return c.output_dir / name; }

template <typename Fn>
auto stage_guard(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

TreeMap parse_trees(const std::vector<PageRecord>& pages, const std::set<std::string>& wanted, unsigned jobs) {
  std::vector<std::optional<DomTree>> parsed(pages.size());
  parallel_for(pages.size(), jobs, [&](std::size_t i) {
    if (!wanted.count(pages[i].page_id)) return;
    try {
      parsed[i] = parse_dom(pages[i]);
    } catch (const PageUnparseable&) {
    }
  });
  TreeMap trees;
  for (std::size_t i = 0; i < pages.size(); ++i) {
    if (parsed[i]) trees.emplace(pages[i].page_id, std::move(*parsed[i]));
  }
  return trees;
}

GeoLevel level_for_category(std::string_view category) {
  if (category == "Country and Continental Levels") return GeoLevel::kCountry;
  if (category == "Administrative Divisions") return GeoLevel::kCity;
  return GeoLevel::kStreet;
}

// "state street" hits both "state" and "street"; the street reading wins.
GeoLevel finest_hit_level(const std::vector<KeywordHit>& hits) {
  GeoLevel level = GeoLevel::kCountry;
  for (const auto& h : hits) level = std::max(level, level_for_category(h.category));
  return level;
}

std::unique_ptr<SearchBackend> make_search_backend(const PipelineConfig& c) {
  switch (c.search_backend) {
    case BackendKind::kFixture:
      if (!c.search_fixture) throw ConfigError("fixture search backend needs search_fixture");
      return std::make_unique<FixtureSearchBackend>(*c.search_fixture);
    case BackendKind::kHttp:
      return HttpSearchBackend::from_env();
    case BackendKind::kNull:
      return std::make_unique<NullSearchBackend>();
  }
  return std::make_unique<NullSearchBackend>();
}

std::unique_ptr<Geocoder> make_geocoder(const PipelineConfig& c) {
  switch (c.geocoder_backend) {
    case BackendKind::kFixture:
      if (!c.geocoder_fixture) throw ConfigError("fixture geocoder backend needs geocoder_fixture");
      return std::make_unique<FixtureGeocoder>(*c.geocoder_fixture);
    case BackendKind::kHttp:
      return HttpGeocoder::from_env();
    case BackendKind::kNull:
      return std::make_unique<NullGeocoder>();
  }
  return std::make_unique<NullGeocoder>();
}

void apply_resolution(GeoInference& inf, const Disambiguation& d) {
  inf.status = d.status;
  inf.constraint_used = d.constraint_used;
  if (d.chosen) {
    inf.lat = d.chosen->lat;
    inf.lon = d.chosen->lon;
    inf.admin = d.chosen->admin;
  }
}

}  // namespace

IngestResult run_ingest(const PipelineConfig& config, std::ostream& log) {
  return stage_guard("ingest", [&] {
    const auto corpus = load_corpus(config.corpus);
    for (const auto& d : corpus.diagnostics) log << "ingest: skipped " << d << '\n';

    IngestResult result;
    result.skipped = corpus.skipped;
    result.pages.resize(corpus.pages.size());
    parallel_for(corpus.pages.size(), config.jobs, [&](std::size_t i) {
      const auto& page = corpus.pages[i];
      PageSummary& s = result.pages[i];
      s.page_id = page.page_id;
      s.endpoint = page.endpoint;
      try {
        const DomTree tree = parse_dom(page);
        s.node_count = tree.node_count;
        s.digest = nilsimsa_digest(serialize_page(tree, page.page_id).composite);
      } catch (const PageUnparseable&) {
      }
    });
    for (const auto& s : result.pages) {
      if (!s.digest) {
        ++result.unparseable;
        log << "ingest: page " << s.page_id << " is unparseable\n";
      }
    }
    write_pages(artifact(config, "pages.jsonl"), result.pages);
    log << "ingest: " << result.pages.size() << " pages, " << result.skipped << " skipped, " << result.unparseable
        << " unparseable\n";
    return result;
  });
}

ClusterSet run_cluster(const PipelineConfig& config, std::ostream& log) {
  return stage_guard("cluster", [&] {
    const auto pages = read_pages(artifact(config, "pages.jsonl"));
    std::vector<DigestEntry> digests;
    for (const auto& p : pages) {
      if (p.digest) digests.push_back({p.page_id, *p.digest});
    }
    std::sort(digests.begin(), digests.end(), [](const auto& a, const auto& b) { return a.page_id < b.page_id; });
    ClusterSet set = config.algorithm == ClusterAlgorithm::kGreedy
                         ? cluster_greedy(digests, config.threshold, config.join_rule)
                         : cluster_hierarchical(digests, similarity_threshold_for_distance(config.threshold));
    if (config.algorithm == ClusterAlgorithm::kHierarchical) set.distance_threshold = config.threshold;
    write_clusters(artifact(config, "clusters.jsonl"), set);
    log << "cluster: " << set.clusters.size() << " clusters (" << set.singleton_count() << " singletons) via "
        << to_string(set.algorithm) << '\n';
    return set;
  });
}

std::vector<DifferentialTextSet> run_diff(const PipelineConfig& config, std::ostream& log) {
  return stage_guard("diff", [&] {
    const ClusterSet set = read_clusters(artifact(config, "clusters.jsonl"));
    const auto corpus = load_corpus(config.corpus);
    std::set<std::string> wanted;
    for (const auto& c : set.clusters) {
      if (!c.is_singleton()) wanted.insert(c.members.begin(), c.members.end());
    }
    const TreeMap trees = parse_trees(corpus.pages, wanted, config.jobs);

    std::vector<DifferentialTextSet> sets(set.clusters.size());
    parallel_for(set.clusters.size(), config.jobs,
                 [&](std::size_t i) { sets[i] = extract_differential(set.clusters[i], trees); });
    std::size_t entries = 0;
    for (const auto& s : sets) {
      entries += s.entries.size();
      if (s.unaligned_peer_nodes > 0) {
        log << "diff: cluster " << s.cluster_id << " has " << s.unaligned_peer_nodes
            << " peer text nodes absent from its reference\n";
      }
    }
    write_diffs(artifact(config, "diff.jsonl"), sets);
    log << "diff: " << entries << " differential entries\n";
    return sets;
  });
}

MineResult run_mine(const PipelineConfig& config, std::ostream& log) {
  return stage_guard("mine", [&] {
    const auto pages = read_pages(artifact(config, "pages.jsonl"));
    const auto diffs = read_diffs(artifact(config, "diff.jsonl"));
    const KeywordSet keywords = config.keyword_file ? KeywordSet::load(*config.keyword_file) : KeywordSet::defaults();

    MineResult result;
    std::map<std::string, std::vector<std::size_t>> clues_by_page;
    for (const auto& set : diffs) {
      for (const auto& entry : set.entries) {
        clues_by_page[entry.page_id].push_back(result.clues.size());
        result.clues.push_back(route_clue(entry, set.cluster_id, keywords));
      }
    }
    {
      auto out = open_out(artifact(config, "clues.jsonl"));
      for (const auto& c : result.clues) {
        const json j = {{"page_id", c.page_id},   {"cluster_id", c.cluster_id},
                        {"path", c.path},         {"text", c.text},
                        {"route", std::string(to_string(c.route))}, {"hits", hits_to_json(c.hits)},
                        {"empty_text", c.empty_text}};
        out << j.dump() << '\n';
      }
    }

    auto geocoder = make_geocoder(config);
    auto search_backend = make_search_backend(config);
    std::vector<IpProviderTable> providers;
    if (config.geo_constraint) {
      for (const auto& p : config.provider_tables) {
        std::vector<std::string> diagnostics;
        providers.push_back(IpProviderTable::load_csv(p, &diagnostics));
        for (const auto& d : diagnostics) log << "mine: provider row skipped " << d << '\n';
      }
    }
    auto constraint_for = [&](const std::string& ip) {
      if (!config.geo_constraint || providers.empty()) return RegionConstraint{};
      return majority_vote(resolve_ip_region(ip, providers));
    };
    auto geocode = [&](const std::string& entity) -> std::vector<CoordinateCandidate> {
      try {
        return geocode_entity(entity, *geocoder, config.retries);
      } catch (const GeocodeUnavailable& e) {
        log << "mine: " << e.what() << '\n';
        return {};
      }
    };

    // Stage 1: keyword clues go straight to geocoding.
    std::vector<GeoInference> inferences(pages.size());
    std::vector<std::size_t> needs_llm;
    for (std::size_t i = 0; i < pages.size(); ++i) {
      GeoInference& inf = inferences[i];
      inf.page_id = pages[i].page_id;
      inf.endpoint = pages[i].endpoint;
      auto it = clues_by_page.find(inf.page_id);
      if (it == clues_by_page.end()) continue;
      inf.stage = InferenceStage::kKeyword;
      bool done = false;
      for (std::size_t ci : it->second) {
        const ClueRecord& clue = result.clues[ci];
        if (clue.route != ClueRoute::kDeterministic) continue;
        auto candidates = geocode(clue.text);
        if (candidates.empty()) continue;
        inf.entity = canonicalize_entity(clue.text);
        inf.level = finest_hit_level(clue.hits);
        apply_resolution(inf, disambiguate(candidates, constraint_for(inf.endpoint.ip)));
        done = true;
        break;
      }
      if (!done) needs_llm.push_back(i);
    }

    // Stage 2: search augmentation for clues without keyword hits.
    std::vector<std::size_t> llm_clues;
    for (std::size_t i : needs_llm) {
      for (std::size_t ci : clues_by_page[pages[i].page_id]) {
        if (!result.clues[ci].empty_text) llm_clues.push_back(ci);
      }
    }
    std::vector<SearchQuery> queries;
    std::vector<std::size_t> query_clue;
    std::map<std::size_t, std::string> skipped_queries;
    for (std::size_t ci : llm_clues) {
      const ClueRecord& clue = result.clues[ci];
      if (clue.route != ClueRoute::kNeedsAugmentation) continue;
      try {
        queries.push_back(build_query(clue));
        query_clue.push_back(ci);
      } catch (const QuerySkipped& e) {
        skipped_queries[ci] = e.what();
      }
    }
    SearchCache cache(config.search_cache.value_or(artifact(config, "search_cache.jsonl")));
    AugmenterOptions aug_options;
    aug_options.max_snippets = config.max_snippets;
    aug_options.retries = config.retries;
    aug_options.backoff = std::chrono::milliseconds(config.search_backend == BackendKind::kHttp ? config.backoff_ms : 0);
    aug_options.requests_per_second = config.search_backend == BackendKind::kHttp ? config.search_rate : 0.0;
    aug_options.max_in_flight = std::min<std::size_t>(4, std::max(1U, config.jobs));
    Augmenter augmenter(*search_backend, cache, aug_options);
    const auto fetched = augmenter.fetch_all(queries);
    std::map<std::size_t, const Augmentation*> augmentation_for;
    {
      auto out = open_out(artifact(config, "augmentations.jsonl"));
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const ClueRecord& clue = result.clues[query_clue[q]];
        json j = {{"page_id", clue.page_id}, {"cluster_id", clue.cluster_id}, {"path", clue.path},
                  {"query", queries[q].query_text}};
        if (fetched[q]) {
          augmentation_for[query_clue[q]] = &*fetched[q];
          json snippets = json::array();
          for (const auto& s : fetched[q]->snippets)
            snippets.push_back({{"title", s.title}, {"snippet", s.snippet}, {"url", s.url}});
          j["status"] = "augmented";
          j["snippets"] = snippets;
          j["backend_tag"] = fetched[q]->backend_tag;
          j["retrieved_at"] = fetched[q]->retrieved_at;
        } else {
          j["status"] = "unaugmented";
        }
        out << j.dump() << '\n';
      }
      for (const auto& [ci, why] : skipped_queries) {
        const ClueRecord& clue = result.clues[ci];
        out << json{{"page_id", clue.page_id}, {"cluster_id", clue.cluster_id}, {"path", clue.path},
                    {"status", "skipped"}, {"reason", why}}
                   .dump()
            << '\n';
      }
    }

    // Stage 3: every model reads every remaining clue; one worker per model.
    std::vector<ModelClient> clients;
    if (config.model_roster) clients = make_clients(load_model_roster(*config.model_roster));
    if (clients.empty() && !llm_clues.empty()) log << "mine: no models configured, llm stage yields nothing\n";
    std::map<std::string, double> weights;
    for (const auto& c : clients) weights[c.model_id] = c.weight;

    std::vector<PromptBundle> bundles;
    for (std::size_t ci : llm_clues) {
      auto a = augmentation_for.find(ci);
      bundles.push_back(render_prompts(result.clues[ci], a == augmentation_for.end() ? nullptr : a->second,
                                       config.prompt_token_budget));
    }
    // [model][clue]
    std::vector<std::vector<ParsedCandidates>> parsed(clients.size(), std::vector<ParsedCandidates>(llm_clues.size()));
    std::vector<std::string> model_errors(clients.size());
    parallel_for(clients.size(), static_cast<unsigned>(clients.size()), [&](std::size_t m) {
      for (std::size_t k = 0; k < llm_clues.size(); ++k) {
        const ModelRun run = run_conversation(clients[m], bundles[k]);
        if (run.failed) {
          model_errors[m] = run.error;
          continue;
        }
        parsed[m][k] = parse_candidates(run.final_response, clients[m].model_id);
      }
    });
    for (std::size_t m = 0; m < clients.size(); ++m) {
      if (!model_errors[m].empty()) log << "mine: model " << clients[m].model_id << ": " << model_errors[m] << '\n';
    }

    std::map<std::string, std::vector<GeoCandidate>> candidates_by_page;
    {
      auto out = open_out(artifact(config, "candidates.jsonl"));
      for (std::size_t k = 0; k < llm_clues.size(); ++k) {
        const ClueRecord& clue = result.clues[llm_clues[k]];
        for (std::size_t m = 0; m < clients.size(); ++m) {
          for (const auto& cand : parsed[m][k].candidates) {
            candidates_by_page[clue.page_id].push_back(cand);
            out << json{{"page_id", clue.page_id},
                        {"path", clue.path},
                        {"model_id", cand.model_id},
                        {"level", std::string(to_string(cand.level))},
                        {"entity", cand.entity},
                        {"confidence", cand.confidence}}
                       .dump()
                << '\n';
          }
        }
      }
    }

    // Stage 4: geocode the finest agreed entity and disambiguate.
    for (std::size_t i : needs_llm) {
      GeoInference& inf = inferences[i];
      inf.stage = InferenceStage::kLlm;
      const auto& cands = candidates_by_page[inf.page_id];
      if (cands.empty()) continue;
      const EnsembleResult ensemble = aggregate_weighted(cands, weights);
      for (auto it = ensemble.levels.rbegin(); it != ensemble.levels.rend(); ++it) {
        if (it->abstained) continue;
        auto coords = geocode(it->entity);
        if (coords.empty()) continue;
        inf.entity = it->entity;
        inf.level = it->level;
        apply_resolution(inf, disambiguate(coords, constraint_for(inf.endpoint.ip)));
        break;
      }
    }

    write_inferences(artifact(config, "inferences.jsonl"), inferences);
    result.inferences = std::move(inferences);
    std::size_t resolved = 0;
    for (const auto& inf : result.inferences) resolved += inf.status == InferenceStatus::kResolved ? 1 : 0;
    log << "mine: " << result.clues.size() << " clues, " << queries.size() << " search queries, " << resolved << " of "
        << result.inferences.size() << " pages resolved\n";
    return result;
  });
}

ReportBundle run_report(const PipelineConfig& config, std::ostream& log) {
  return stage_guard("report", [&] {
    const auto inferences = read_inferences(artifact(config, "inferences.jsonl"));
    const fs::path* asn = config.asn_table ? &*config.asn_table : nullptr;
    ReportBundle bundle = emit_report(inferences, asn, config.output_dir / "report");
    for (const auto& n : bundle.notices) log << "report: " << n << '\n';
    return bundle;
  });
}

ReportBundle run_pipeline(const PipelineConfig& config, std::ostream& log) {
  fs::create_directories(config.output_dir);
  run_ingest(config, log);
  run_cluster(config, log);
  run_diff(config, log);
  run_mine(config, log);
  return run_report(config, log);
}

SweepOutcome run_sweep(const PipelineConfig& config, std::ostream& log) {
  if (!config.gold) throw ConfigError("sweep needs a gold file with class labels");
  const auto gold = load_gold(*config.gold);
  return stage_guard("sweep", [&] {
    std::map<std::string, std::string> truths;
    for (const auto& g : gold) {
      if (g.class_label) truths[g.page_id] = *g.class_label;
    }
    const auto corpus = load_corpus(config.corpus);
    std::vector<DigestEntry> digests;
    for (const auto& page : corpus.pages) {
      try {
        const auto tree = parse_dom(page);
        digests.push_back({page.page_id, nilsimsa_digest(serialize_page(tree, page.page_id).composite)});
      } catch (const PageUnparseable&) {
        log << "sweep: page " << page.page_id << " is unparseable, excluded\n";
      }
    }
    for (const auto& d : digests) {
      if (!truths.count(d.page_id)) throw ConfigError("gold file lacks a class label for page " + d.page_id);
    }
    SweepOutcome outcome;
    outcome.rows = threshold_sweep(digests, truths, config.sweep_thresholds);
    if (outcome.rows.empty()) throw ConfigError("no sweep thresholds");
    outcome.best = best_sweep_row(outcome.rows);

    auto out = open_out(artifact(config, "sweep.csv"));
    out << "threshold,total_clusters,valid_clusters,singletons,true_classes,purity,ari,nmi,homogeneity,completeness,"
           "v_measure,purity_ns,ari_ns,nmi_ns,homogeneity_ns,completeness_ns,v_measure_ns\n";
    out.precision(6);
    out << std::fixed;
    for (const auto& r : outcome.rows) {
      out << r.threshold << ',' << r.total_clusters << ',' << r.valid_clusters << ',' << r.singletons << ','
          << r.true_classes << ',' << r.all.purity << ',' << r.all.ari << ',' << r.all.info.nmi << ','
          << r.all.info.homogeneity << ',' << r.all.info.completeness << ',' << r.all.info.v_measure;
      if (r.without_singletons) {
        const auto& n = *r.without_singletons;
        out << ',' << n.purity << ',' << n.ari << ',' << n.info.nmi << ',' << n.info.homogeneity << ','
            << n.info.completeness << ',' << n.info.v_measure;
      } else {
        out << ",,,,,,";
      }
      out << '\n';
    }
    const auto& best = outcome.rows[outcome.best];
    std::ostringstream line;
    line.precision(6);
    line << std::fixed << "best_threshold=" << best.threshold << " v_measure=" << best.all.info.v_measure;
    auto best_out = open_out(artifact(config, "sweep_best.txt"));
    best_out << line.str() << '\n';
    log << "sweep: " << line.str() << '\n';
    return outcome;
  });
}

std::vector<ExtractionMetrics> run_eval(const PipelineConfig& config, std::ostream& log) {
  if (!config.gold) throw ConfigError("eval needs a gold file");
  const auto gold = load_gold(*config.gold);
  return stage_guard("eval", [&] {
    const auto inferences = read_inferences(artifact(config, "inferences.jsonl"));
    std::vector<ExtractedLocation> extracted;
    for (const auto& inf : inferences) extracted.push_back(extracted_location(inf));

    std::vector<ExtractionMetrics> metrics;
    auto out = open_out(config.output_dir / "eval" / "extraction.csv");
    out << "level,pages_total,pages_with_geo,extracted,correct,coverage_pct,accuracy_pct\n";
    out.precision(4);
    out << std::fixed;
    for (GeoLevel level : kAllLevels) {
      ExtractionMetrics m;
      try {
        m = extraction_metrics(extracted, gold, level);
      } catch (const std::invalid_argument&) {
        log << "eval: no gold values at " << to_string(level) << " level\n";
        continue;
      }
      out << to_string(level) << ',' << m.tally.pages_total << ',' << m.tally.pages_with_geo << ','
          << m.tally.extracted << ',' << m.tally.correct << ',' << m.coverage << ',';
      if (m.accuracy) out << *m.accuracy;
      else out << "undefined";
      out << '\n';
      std::ostringstream line;
      line.precision(2);
      line << std::fixed << "eval: " << to_string(level) << " coverage " << m.coverage << "% accuracy ";
      if (m.accuracy) line << *m.accuracy << '%';
      else line << "undefined";
      log << line.str() << '\n';
      metrics.push_back(m);
    }

    std::map<std::string, std::string> truths;
    for (const auto& g : gold) {
      if (g.class_label) truths[g.page_id] = *g.class_label;
    }
    const fs::path clusters_path = artifact(config, "clusters.jsonl");
    if (!truths.empty() && fs::exists(clusters_path)) {
      const ClusterSet set = read_clusters(clusters_path);
      std::map<std::string, int> assignments;
      std::map<std::string, std::string> labeled;
      for (const auto& [page, cid] : set.assignments()) {
        auto t = truths.find(page);
        if (t == truths.end()) continue;
        assignments[page] = cid;
        labeled[page] = t->second;
      }
      if (!assignments.empty()) {
        const auto s = clustering_scores(LabeledPartition::from_maps(assignments, labeled));
        auto cout = open_out(config.output_dir / "eval" / "clustering.csv");
        cout.precision(6);
        cout << std::fixed << "purity,ari,nmi,homogeneity,completeness,v_measure\n"
             << s.purity << ',' << s.ari << ',' << s.info.nmi << ',' << s.info.homogeneity << ','
             << s.info.completeness << ',' << s.info.v_measure << '\n';
      }
    }
    return metrics;
  });
}

}  // namespace devgeo
