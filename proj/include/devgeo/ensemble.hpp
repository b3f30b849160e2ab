#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "devgeo/augment.hpp"
#include "devgeo/cluemine.hpp"

namespace devgeo {

enum class GeoLevel { kCountry = 0, kCity = 1, kStreet = 2 };

inline constexpr std::array<GeoLevel, 3> kAllLevels = {GeoLevel::kCountry, GeoLevel::kCity, GeoLevel::kStreet};

std::string_view to_string(GeoLevel level);
std::optional<GeoLevel> parse_geo_level(std::string_view s);

namespace prompts {
inline constexpr std::string_view kEntityRecognition =
    "Please analyze whether the following text contains geographic location information and extract specific "
    "geographic location names.";
inline constexpr std::string_view kContextVerification =
    "Please determine whether the extracted geographic location information is accurate based on the context and "
    "add relevant details.";
inline constexpr std::string_view kInferenceChain =
    "If there is ambiguous geographic location information in the text, please infer its possible meaning and "
    "provide reasoning results.";
// Appended to every template so the final answer can be parsed.
inline constexpr std::string_view kResponseFormat =
    "Finish your answer with one line per location in the form `LEVEL | ENTITY | CONFIDENCE`, where LEVEL is "
    "country, city or street and CONFIDENCE is a number between 0 and 1. If there is no location, answer `none`.";
}  // namespace prompts

struct PromptBundle {
  std::string entity_prompt;
  std::string verification_prompt;
  std::string inference_prompt;
  std::string context;
  std::size_t snippets_used = 0;
};

inline constexpr std::size_t kDefaultPromptTokenBudget = 2048;

/// Rough token count used for budgeting (four bytes per token, rounded up).
std::size_t estimate_tokens(std::string_view text);

/// Builds the three prompts around a shared context block. Snippets are
/// dropped from the tail until every prompt fits `token_budget`; the clue
/// text itself is never cut.
PromptBundle render_prompts(const ClueRecord& clue, const Augmentation* augmentation,
                            std::size_t token_budget = kDefaultPromptTokenBudget);

struct GeoCandidate {
  std::string entity;
  GeoLevel level = GeoLevel::kCity;
  double confidence = 0.0;
  std::string model_id;
};

struct ParsedCandidates {
  std::vector<GeoCandidate> candidates;
  std::size_t malformed_lines = 0;
  std::size_t clamped = 0;
};

/// Parses `LEVEL | ENTITY | CONFIDENCE` lines. Confidences outside [0, 1]
/// are clamped and counted.
ParsedCandidates parse_candidates(std::string_view raw_response, std::string_view model_id);

struct LevelDecision {
  GeoLevel level = GeoLevel::kCity;
  bool abstained = true;
  std::string entity;
  double score = 0.0;
};

struct EnsembleResult {
  std::array<LevelDecision, 3> levels;
  std::vector<GeoCandidate> per_model;  // after per-model deduplication

  const LevelDecision& at(GeoLevel level) const { return levels[static_cast<int>(level)]; }
  /// Finest level that did not abstain.
  const LevelDecision* finest() const;
};

/// Weighted argmax per level: score(G) = sum over models of w * c(G).
/// Scores within a relative 1e-9 count as tied; ties go to the higher single
/// model confidence, then to the lexicographically smaller entity. Models
/// without a weight contribute nothing.
EnsembleResult aggregate_weighted(const std::vector<GeoCandidate>& candidates,
                                  const std::map<std::string, double>& weights);

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string content;
};

class ModelTransport {
 public:
  virtual ~ModelTransport() = default;
  /// Reply to the conversation; throws BackendError on failure.
  virtual std::string complete(const std::vector<ChatMessage>& conversation) = 0;
};

/// Canned replies keyed by SHA-256 of the latest user prompt. A file of the
/// form {"by_hash": {...}, "by_text": {...}} may also key replies on the clue
/// text of the prompt's context block. Unknown prompts get an empty reply.
class FixtureTransport : public ModelTransport {
 public:
  explicit FixtureTransport(const std::filesystem::path& path);
  explicit FixtureTransport(std::map<std::string, std::string> by_prompt_hash);
  std::string complete(const std::vector<ChatMessage>& conversation) override;

 private:
  std::map<std::string, std::string> replies_;
  std::map<std::string, std::string> by_text_;
};

/// OpenAI-style chat-completions endpoint.
class HttpChatTransport : public ModelTransport {
 public:
  HttpChatTransport(std::string endpoint, std::string model, std::string api_key,
                    std::chrono::milliseconds timeout = std::chrono::seconds(60));
  std::string complete(const std::vector<ChatMessage>& conversation) override;

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

enum class ModelClass { kOnline, kBestOffline, kOffline };

/// 2.0 for online models, 1.5 for the strongest offline model, 1.0 otherwise.
double default_weight(ModelClass cls);

struct ModelClient {
  std::string model_id;
  double weight = 1.0;
  std::unique_ptr<ModelTransport> transport;
};

struct ModelSpec {
  std::string model_id;
  double weight = 1.0;
  std::string transport;  // "fixture" or "http"
  std::optional<std::string> endpoint;
  std::optional<std::string> api_key_env;
  std::optional<std::filesystem::path> fixture;
};

/// Roster JSON: a list (or {"models": [...]}) of {model_id, weight | class,
/// transport, endpoint?, api_key_env?, fixture?}. Relative fixture paths
/// resolve against the roster file. Throws ConfigError.
std::vector<ModelSpec> load_model_roster(const std::filesystem::path& path);

/// `<MODEL_ID>_API_KEY` with non-alphanumerics mapped to '_'.
std::string default_api_key_env(std::string_view model_id);

std::vector<ModelClient> make_clients(const std::vector<ModelSpec>& roster);

struct ModelRun {
  std::string model_id;
  std::string final_response;
  bool failed = false;
  std::string error;
};

/// entity -> verification -> inference as one conversation; returns the last
/// reply.
ModelRun run_conversation(ModelClient& client, const PromptBundle& bundle);

}  // namespace devgeo
