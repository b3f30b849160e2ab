#include "devgeo/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "devgeo/errors.hpp"
#include "devgeo/net.hpp"
#include "devgeo/text.hpp"

namespace devgeo {

using nlohmann::json;

std::string_view to_string(GeoLevel level) {
  switch (level) {
    case GeoLevel::kCountry:
      return "country";
    case GeoLevel::kCity:
      return "city";
    case GeoLevel::kStreet:
      return "street";
  }
  return "city";
}

std::optional<GeoLevel> parse_geo_level(std::string_view s) {
  const std::string l = to_lower_ascii(collapse_whitespace(s));
  if (l == "country") return GeoLevel::kCountry;
  if (l == "city") return GeoLevel::kCity;
  if (l == "street") return GeoLevel::kStreet;
  return std::nullopt;
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

namespace {

std::string build_context(const std::string& text, const std::vector<Snippet>& snippets, std::size_t count) {
  std::string ctx = "Text: " + text;
  if (count > 0) {
    ctx += "\nSearch results:";
    for (std::size_t i = 0; i < count; ++i) {
      const auto& s = snippets[i];
      ctx += "\n" + std::to_string(i + 1) + ". " + s.title;
      if (!s.snippet.empty()) ctx += ": " + s.snippet;
      if (!s.url.empty()) ctx += " (" + s.url + ")";
    }
  }
  return ctx;
}

std::string compose(std::string_view tmpl, const std::string& context) {
  std::string out(tmpl);
  out += "\n\n";
  out += prompts::kResponseFormat;
  out += "\n\n";
  out += context;
  return out;
}

}  // namespace

PromptBundle render_prompts(const ClueRecord& clue, const Augmentation* augmentation, std::size_t token_budget) {
  static const std::vector<Snippet> kNone;
  const auto& snippets = augmentation ? augmentation->snippets : kNone;
  const std::size_t overhead =
      std::max({prompts::kEntityRecognition.size(), prompts::kContextVerification.size(),
                prompts::kInferenceChain.size()}) +
      prompts::kResponseFormat.size() + 4;

  std::size_t count = snippets.size();
  std::string context = build_context(clue.text, snippets, count);
  while (count > 0 && estimate_tokens(context) + (overhead + 3) / 4 > token_budget) {
    --count;
    context = build_context(clue.text, snippets, count);
  }

  PromptBundle bundle;
  bundle.context = context;
  bundle.snippets_used = count;
  bundle.entity_prompt = compose(prompts::kEntityRecognition, context);
  bundle.verification_prompt = compose(prompts::kContextVerification, context);
  bundle.inference_prompt = compose(prompts::kInferenceChain, context);
  return bundle;
}

ParsedCandidates parse_candidates(std::string_view raw_response, std::string_view model_id) {
  ParsedCandidates out;
  std::istringstream in{std::string(raw_response)};
  std::string line;
  while (std::getline(in, line)) {
    std::string s = collapse_whitespace(line);
    while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '`' || s.front() == ' ')) s.erase(0, 1);
    while (!s.empty() && (s.back() == '`' || s.back() == ' ')) s.pop_back();
    if (s.empty() || to_lower_ascii(s) == "none") continue;

    const auto first = s.find('|');
    const auto second = first == std::string::npos ? std::string::npos : s.find('|', first + 1);
    if (second == std::string::npos || s.find('|', second + 1) != std::string::npos) {
      ++out.malformed_lines;
      continue;
    }
    const auto level = parse_geo_level(s.substr(0, first));
    std::string entity = canonicalize_entity(s.substr(first + 1, second - first - 1));
    const std::string conf_text = collapse_whitespace(s.substr(second + 1));
    double confidence = 0.0;
    bool conf_ok = false;
    if (!conf_text.empty()) {
      char* end = nullptr;
      confidence = std::strtod(conf_text.c_str(), &end);
      conf_ok = end == conf_text.c_str() + conf_text.size() && std::isfinite(confidence);
    }
    if (!level || entity.empty() || !conf_ok) {
      ++out.malformed_lines;
      continue;
    }
    if (confidence < 0.0 || confidence > 1.0) {
      confidence = std::clamp(confidence, 0.0, 1.0);
      ++out.clamped;
    }
    out.candidates.push_back({std::move(entity), *level, confidence, std::string(model_id)});
  }
  return out;
}

const LevelDecision* EnsembleResult::finest() const {
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    if (!it->abstained) return &*it;
  }
  return nullptr;
}

EnsembleResult aggregate_weighted(const std::vector<GeoCandidate>& candidates,
                                  const std::map<std::string, double>& weights) {
  // one vote per (model, level, entity), keeping the most confident
  std::map<std::tuple<std::string, int, std::string>, GeoCandidate> deduped;
  for (const auto& c : candidates) {
    auto key = std::make_tuple(c.model_id, static_cast<int>(c.level), c.entity);
    auto it = deduped.find(key);
    if (it == deduped.end()) {
      deduped.emplace(std::move(key), c);
    } else if (c.confidence > it->second.confidence) {
      it->second = c;
    }
  }

  EnsembleResult result;
  for (const auto& [key, c] : deduped) result.per_model.push_back(c);

  for (GeoLevel level : kAllLevels) {
    struct Tally {
      double score = 0.0;
      double max_confidence = 0.0;
    };
    std::map<std::string, Tally> tallies;
    for (const auto& c : result.per_model) {
      if (c.level != level) continue;
      auto w = weights.find(c.model_id);
      auto& t = tallies[c.entity];
      if (w != weights.end()) t.score += w->second * c.confidence;
      t.max_confidence = std::max(t.max_confidence, c.confidence);
    }
    LevelDecision& decision = result.levels[static_cast<int>(level)];
    decision.level = level;
    if (tallies.empty()) continue;

    auto close = [](double a, double b) {
      return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b), 1e-300});
    };
    const std::pair<const std::string, Tally>* best = nullptr;
    for (const auto& entry : tallies) {  // lexicographic order
      if (best == nullptr) {
        best = &entry;
        continue;
      }
      const Tally& a = entry.second;
      const Tally& b = best->second;
      if (!close(a.score, b.score)) {
        if (a.score > b.score) best = &entry;
      } else if (a.max_confidence > b.max_confidence) {
        best = &entry;
      }
    }
    decision.abstained = false;
    decision.entity = best->first;
    decision.score = best->second.score;
  }
  return result;
}

FixtureTransport::FixtureTransport(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read model fixture " + path.string());
  try {
    const json doc = json::parse(in);
    if (doc.contains("by_hash") || doc.contains("by_text")) {
      const json by_hash = doc.value("by_hash", json::object());
      const json by_text = doc.value("by_text", json::object());
      for (const auto& [key, value] : by_hash.items()) replies_[to_lower_ascii(key)] = value.get<std::string>();
      for (const auto& [key, value] : by_text.items()) by_text_[key] = value.get<std::string>();
    } else {
      for (const auto& [key, value] : doc.items()) replies_[to_lower_ascii(key)] = value.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ConfigError("model fixture " + path.string() + ": " + e.what());
  }
}

FixtureTransport::FixtureTransport(std::map<std::string, std::string> by_prompt_hash)
    : replies_(std::move(by_prompt_hash)) {}

std::string FixtureTransport::complete(const std::vector<ChatMessage>& conversation) {
  for (auto it = conversation.rbegin(); it != conversation.rend(); ++it) {
    if (it->role != "user") continue;
    auto hit = replies_.find(sha256_hex(it->content));
    if (hit != replies_.end()) return hit->second;
    // The context block starts with "Text: <clue>" on its own line.
    const auto pos = it->content.find("\n\nText: ");
    if (pos == std::string::npos) return {};
    const auto start = pos + 8;
    const auto end = it->content.find('\n', start);
    auto text_hit = by_text_.find(it->content.substr(start, end == std::string::npos ? end : end - start));
    return text_hit == by_text_.end() ? std::string() : text_hit->second;
  }
  return {};
}

HttpChatTransport::HttpChatTransport(std::string endpoint, std::string model, std::string api_key,
                                     std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), api_key_(std::move(api_key)), timeout_(timeout) {}

std::string HttpChatTransport::complete(const std::vector<ChatMessage>& conversation) {
  json messages = json::array();
  for (const auto& m : conversation) messages.push_back({{"role", m.role}, {"content", m.content}});
  const json body = {{"model", model_}, {"messages", messages}, {"temperature", 0}};
  net::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  net::HttpResponse res;
  try {
    res = net::http_post_json(endpoint_, body.dump(), headers, timeout_);
  } catch (const std::exception& e) {
    throw BackendError(e.what());
  }
  if (res.status < 200 || res.status >= 300) throw BackendError("chat endpoint returned HTTP " + std::to_string(res.status));
  try {
    const json doc = json::parse(res.body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("unexpected chat response: ") + e.what());
  }
}

double default_weight(ModelClass cls) {
  switch (cls) {
    case ModelClass::kOnline:
      return 2.0;
    case ModelClass::kBestOffline:
      return 1.5;
    case ModelClass::kOffline:
      return 1.0;
  }
  return 1.0;
}

std::string default_api_key_env(std::string_view model_id) {
  std::string out;
  for (char c : model_id) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    } else {
      out.push_back('_');
    }
  }
  return out + "_API_KEY";
}

std::vector<ModelSpec> load_model_roster(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read model roster " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("model roster " + path.string() + ": " + e.what());
  }
  const json& list = doc.is_object() && doc.contains("models") ? doc["models"] : doc;
  if (!list.is_array()) throw ConfigError("model roster must be a list of models");

  std::vector<ModelSpec> roster;
  for (const auto& item : list) {
    ModelSpec spec;
    spec.model_id = item.value("model_id", std::string());
    if (spec.model_id.empty()) throw ConfigError("model roster entry without model_id");
    if (item.contains("weight")) {
      spec.weight = item["weight"].get<double>();
    } else {
      const std::string cls = item.value("class", std::string("offline"));
      if (cls == "online") spec.weight = default_weight(ModelClass::kOnline);
      else if (cls == "best_offline") spec.weight = default_weight(ModelClass::kBestOffline);
      else if (cls == "offline") spec.weight = default_weight(ModelClass::kOffline);
      else throw ConfigError("unknown model class '" + cls + "'");
    }
    if (!(spec.weight > 0.0)) throw ConfigError("model " + spec.model_id + " needs a positive weight");
    spec.transport = item.value("transport", std::string("fixture"));
    if (spec.transport != "fixture" && spec.transport != "http") {
      throw ConfigError("model " + spec.model_id + ": unknown transport '" + spec.transport + "'");
    }
    if (item.contains("endpoint")) spec.endpoint = item["endpoint"].get<std::string>();
    if (item.contains("api_key_env")) spec.api_key_env = item["api_key_env"].get<std::string>();
    if (item.contains("fixture")) {
      std::filesystem::path f = item["fixture"].get<std::string>();
      spec.fixture = f.is_absolute() ? f : path.parent_path() / f;
    }
    if (spec.transport == "fixture" && !spec.fixture) throw ConfigError("model " + spec.model_id + " lacks a fixture");
    if (spec.transport == "http" && !spec.endpoint) throw ConfigError("model " + spec.model_id + " lacks an endpoint");
    roster.push_back(std::move(spec));
  }
  return roster;
}

std::vector<ModelClient> make_clients(const std::vector<ModelSpec>& roster) {
  std::vector<ModelClient> clients;
  for (const auto& spec : roster) {
    ModelClient client;
    client.model_id = spec.model_id;
    client.weight = spec.weight;
    if (spec.transport == "fixture") {
      client.transport = std::make_unique<FixtureTransport>(*spec.fixture);
    } else {
      const std::string env = spec.api_key_env.value_or(default_api_key_env(spec.model_id));
      const char* key = std::getenv(env.c_str());
      client.transport = std::make_unique<HttpChatTransport>(*spec.endpoint, spec.model_id, key ? key : "");
    }
    clients.push_back(std::move(client));
  }
  return clients;
}

ModelRun run_conversation(ModelClient& client, const PromptBundle& bundle) {
  ModelRun run;
  run.model_id = client.model_id;
  std::vector<ChatMessage> conversation;
  try {
    for (const std::string* prompt :
         {&bundle.entity_prompt, &bundle.verification_prompt, &bundle.inference_prompt}) {
      conversation.push_back({"user", *prompt});
      std::string reply = client.transport->complete(conversation);
      conversation.push_back({"assistant", reply});
      run.final_response = std::move(reply);
    }
  } catch (const BackendError& e) {
    run.failed = true;
    run.error = e.what();
    run.final_response.clear();
  }
  return run;
}

}  // namespace devgeo
