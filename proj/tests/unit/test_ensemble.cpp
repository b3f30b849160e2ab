#include <doctest.h>

#include <random>

#include "devgeo/ensemble.hpp"
#include "devgeo/errors.hpp"
#include "devgeo/text.hpp"

using namespace devgeo;

namespace {

GeoCandidate cand(std::string model, GeoLevel level, std::string entity, double c) {
  return {std::move(entity), level, c, std::move(model)};
}

ClueRecord clue(std::string text) {
  ClueRecord c;
  c.page_id = "p";
  c.text = std::move(text);
  return c;
}

}  // namespace

TEST_CASE("worked example: paris 3.0 against london 1.0") {
  const std::map<std::string, double> weights{{"A", 2.0}, {"B", 1.5}, {"C", 1.0}};
  const std::vector<GeoCandidate> votes = {cand("A", GeoLevel::kCity, "paris", 0.9),
                                           cand("B", GeoLevel::kCity, "paris", 0.8),
                                           cand("C", GeoLevel::kCity, "london", 1.0)};
  const auto r = aggregate_weighted(votes, weights);
  const auto& city = r.at(GeoLevel::kCity);
  CHECK_FALSE(city.abstained);
  CHECK(city.entity == "paris");
  CHECK(city.score == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.at(GeoLevel::kCountry).abstained);
  CHECK(r.at(GeoLevel::kStreet).abstained);
  REQUIRE(r.finest() != nullptr);
  CHECK(r.finest()->level == GeoLevel::kCity);

  auto scaled = weights;
  for (auto& [k, w] : scaled) w *= 10;
  CHECK(aggregate_weighted(votes, scaled).at(GeoLevel::kCity).entity == "paris");
}

TEST_CASE("a model votes once per entity") {
  const std::map<std::string, double> weights{{"A", 1.0}, {"B", 1.0}};
  const std::vector<GeoCandidate> votes = {cand("A", GeoLevel::kCity, "x", 0.5), cand("A", GeoLevel::kCity, "x", 0.6),
                                           cand("A", GeoLevel::kCity, "x", 0.4), cand("B", GeoLevel::kCity, "y", 1.0)};
  const auto r = aggregate_weighted(votes, weights);
  CHECK(r.at(GeoLevel::kCity).entity == "y");
  CHECK(r.per_model.size() == 2);
}

TEST_CASE("ties fall to the stronger single vote, then the smaller name") {
  const std::map<std::string, double> weights{{"A", 1.0}, {"B", 1.0}, {"C", 1.0}};
  // both score 1.0; "b" has the single 1.0 vote
  const auto r1 = aggregate_weighted(
      {cand("A", GeoLevel::kCity, "a", 0.5), cand("B", GeoLevel::kCity, "a", 0.5), cand("C", GeoLevel::kCity, "b", 1.0)},
      weights);
  CHECK(r1.at(GeoLevel::kCity).entity == "b");
  const auto r2 =
      aggregate_weighted({cand("A", GeoLevel::kCity, "zeta", 0.7), cand("B", GeoLevel::kCity, "alpha", 0.7)}, weights);
  CHECK(r2.at(GeoLevel::kCity).entity == "alpha");
}

TEST_CASE("unweighted models do not score") {
  const auto r = aggregate_weighted({cand("ghost", GeoLevel::kCountry, "fr", 1.0), cand("A", GeoLevel::kCountry, "de", 0.1)},
                                    {{"A", 1.0}});
  CHECK(r.at(GeoLevel::kCountry).entity == "de");
}

TEST_CASE("argmax is invariant under weight scaling") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> n_votes(1, 12), model(0, 2), level(0, 2), entity(0, 4);
  std::uniform_real_distribution<double> conf(0.0, 1.0), weight(0.5, 3.0);
  const std::vector<std::string> names = {"berlin", "paris", "rome", "oslo", "lima"};
  for (int trial = 0; trial < 100; ++trial) {
    std::map<std::string, double> w{{"m0", weight(rng)}, {"m1", weight(rng)}, {"m2", weight(rng)}};
    std::vector<GeoCandidate> votes;
    const int n = n_votes(rng);
    for (int i = 0; i < n; ++i) {
      // round confidences so exact ties actually occur
      const double c = std::round(conf(rng) * 4) / 4;
      votes.push_back(cand("m" + std::to_string(model(rng)), static_cast<GeoLevel>(level(rng)), names[entity(rng)], c));
    }
    const auto base = aggregate_weighted(votes, w);
    for (double lambda : {0.1, 10.0}) {
      auto scaled = w;
      for (auto& [k, v] : scaled) v *= lambda;
      const auto r = aggregate_weighted(votes, scaled);
      for (GeoLevel l : kAllLevels) {
        CHECK(r.at(l).abstained == base.at(l).abstained);
        CHECK(r.at(l).entity == base.at(l).entity);
      }
    }
  }
}

TEST_CASE("parse_candidates reads level | entity | confidence lines") {
  const auto p = parse_candidates(
      "Reasoning first.\n- City | Paris. | 0.9\n`country | FR | 1.7`\nstreet | Rue X | high\ncity | a | b | c\nnone\n"
      "COUNTRY|  Germany |-0.5\n",
      "m");
  REQUIRE(p.candidates.size() == 3);
  CHECK(p.candidates[0].entity == "paris");
  CHECK(p.candidates[0].level == GeoLevel::kCity);
  CHECK(p.candidates[0].model_id == "m");
  CHECK(p.candidates[1].confidence == 1.0);
  CHECK(p.candidates[2].confidence == 0.0);
  CHECK(p.clamped == 2);
  CHECK(p.malformed_lines == 3);
  CHECK(parse_candidates("", "m").candidates.empty());
  CHECK(parse_candidates("none", "m").malformed_lines == 0);
}

TEST_CASE("prompts carry the templates, format and context") {
  Augmentation aug;
  aug.snippets = {{"Berlin Hbf", "Main station", "https://x.test"}};
  const auto b = render_prompts(clue("berlin hbf gleis 4"), &aug);
  CHECK(b.snippets_used == 1);
  CHECK(b.context == "Text: berlin hbf gleis 4\nSearch results:\n1. Berlin Hbf: Main station (https://x.test)");
  CHECK(b.entity_prompt.rfind(prompts::kEntityRecognition, 0) == 0);
  CHECK(b.verification_prompt.rfind(prompts::kContextVerification, 0) == 0);
  CHECK(b.inference_prompt.rfind(prompts::kInferenceChain, 0) == 0);
  CHECK(b.inference_prompt.find(prompts::kResponseFormat) != std::string::npos);
  CHECK(b.inference_prompt.size() - b.context.size() == b.inference_prompt.rfind(b.context));
  const auto bare = render_prompts(clue("lab 2"), nullptr);
  CHECK(bare.context == "Text: lab 2");
}

TEST_CASE("snippets are dropped to fit the budget") {
  Augmentation aug;
  for (int i = 0; i < 10; ++i) aug.snippets.push_back({"title", std::string(400, 'x'), ""});
  const auto b = render_prompts(clue("gicc"), &aug, 400);
  CHECK(b.snippets_used < 10);
  CHECK(estimate_tokens(b.inference_prompt) <= 400);
  const auto tiny = render_prompts(clue(std::string(4000, 'q')), &aug, 10);
  CHECK(tiny.snippets_used == 0);
  CHECK(tiny.context.find(std::string(4000, 'q')) != std::string::npos);
}

TEST_CASE("fixture transport answers by hash or by clue text") {
  const auto bundle = render_prompts(clue("gicc bldg 3"), nullptr);
  ModelClient by_hash{"h", 1.0, std::make_unique<FixtureTransport>(std::map<std::string, std::string>{
                                    {sha256_hex(bundle.inference_prompt), "city | atlanta | 0.9"}})};
  const auto run = run_conversation(by_hash, bundle);
  CHECK_FALSE(run.failed);
  CHECK(run.final_response == "city | atlanta | 0.9");
}

namespace {
class FailingTransport : public ModelTransport {
 public:
  std::string complete(const std::vector<ChatMessage>&) override { throw BackendError("offline"); }
};
class EchoTransport : public ModelTransport {
 public:
  std::string complete(const std::vector<ChatMessage>& c) override { return std::to_string(c.size()); }
};
}  // namespace

TEST_CASE("conversations run three turns and report failures") {
  const auto bundle = render_prompts(clue("x"), nullptr);
  ModelClient echo{"e", 1.0, std::make_unique<EchoTransport>()};
  CHECK(run_conversation(echo, bundle).final_response == "5");
  ModelClient down{"d", 1.0, std::make_unique<FailingTransport>()};
  const auto run = run_conversation(down, bundle);
  CHECK(run.failed);
  CHECK(run.error.find("offline") != std::string::npos);
}

TEST_CASE("model weights by class") {
  CHECK(default_weight(ModelClass::kOnline) == 2.0);
  CHECK(default_weight(ModelClass::kBestOffline) == 1.5);
  CHECK(default_weight(ModelClass::kOffline) == 1.0);
  CHECK(default_api_key_env("gpt-4o") == "GPT_4O_API_KEY");
}
