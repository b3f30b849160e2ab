#include <doctest.h>

#include <stdexcept>

#include <random>
#include <set>

#include "devgeo/cluster.hpp"

using namespace devgeo;

namespace {

// Digest with bits [from, to) set.
StructuralDigest bits(int from, int to) {
  StructuralDigest d;
  for (int b = from; b < to; ++b) d.bytes[31 - b / 8] |= static_cast<std::uint8_t>(1U << (b % 8));
  return d;
}

void check_partition(const ClusterSet& set, const std::vector<DigestEntry>& input) {
  std::multiset<std::string> seen;
  for (const auto& c : set.clusters) {
    CHECK_FALSE(c.members.empty());
    seen.insert(c.members.begin(), c.members.end());
  }
  CHECK(seen.size() == input.size());
  for (const auto& e : input) CHECK(seen.count(e.page_id) == 1);
}

std::vector<DigestEntry> random_entries(std::mt19937& rng, int n) {
  std::vector<DigestEntry> out;
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < n; ++i) {
    StructuralDigest d;
    for (auto& b : d.bytes) b = static_cast<std::uint8_t>(byte(rng));
    out.push_back({"p" + std::to_string(i), d});
  }
  return out;
}

}  // namespace

TEST_CASE("greedy joins the first cluster within threshold") {
  const std::vector<DigestEntry> input = {
      {"a", bits(0, 0)}, {"b", bits(0, 10)}, {"c", bits(0, 60)}, {"d", bits(0, 55)}, {"e", bits(0, 30)}};
  const auto set = cluster_greedy(input, 40);
  REQUIRE(set.clusters.size() == 2);
  CHECK(set.clusters[0].members == std::vector<std::string>{"a", "b", "e"});
  CHECK(set.clusters[1].members == std::vector<std::string>{"c", "d"});
  CHECK(set.clusters[0].representative == bits(0, 0));
  CHECK(set.distance_threshold == 40);
  CHECK(set.singleton_count() == 0);
  check_partition(set, input);
}

TEST_CASE("greedy threshold is inclusive") {
  const std::vector<DigestEntry> input = {{"a", bits(0, 0)}, {"b", bits(0, 40)}, {"c", bits(0, 81)}};
  const auto set = cluster_greedy(input, 40);
  REQUIRE(set.clusters.size() == 2);
  CHECK(set.clusters[0].members.size() == 2);
  CHECK(set.clusters[1].is_singleton());
}

TEST_CASE("greedy nearest rule picks the closest representative") {
  // e is 30 from a and 5 from c; first rule takes a, nearest takes c.
  const std::vector<DigestEntry> input = {{"a", bits(0, 0)}, {"c", bits(0, 35)}, {"e", bits(0, 30)}};
  const auto first = cluster_greedy(input, 32, GreedyJoinRule::kFirstWithinThreshold);
  const auto nearest = cluster_greedy(input, 32, GreedyJoinRule::kNearestWithinThreshold);
  CHECK(first.assignments().at("e") == first.assignments().at("a"));
  CHECK(nearest.assignments().at("e") == nearest.assignments().at("c"));
}

TEST_CASE("greedy edge thresholds") {
  std::mt19937 rng(11);
  const auto input = random_entries(rng, 30);
  CHECK(cluster_greedy(input, 256).clusters.size() == 1);
  const auto zero = cluster_greedy(input, 0);
  CHECK(zero.clusters.size() == 30);
  CHECK(zero.singleton_count() == 30);
  CHECK_THROWS_AS(cluster_greedy(input, -1), std::invalid_argument);
  CHECK_THROWS_AS(cluster_greedy(input, 257), std::invalid_argument);
  CHECK(cluster_greedy({}, 40).clusters.empty());
}

TEST_CASE("greedy is a partition on random inputs") {
  std::mt19937 rng(12);
  for (int t : {0, 100, 120, 128, 140, 256}) {
    const auto input = random_entries(rng, 80);
    check_partition(cluster_greedy(input, t), input);
  }
}

TEST_CASE("hierarchical merges by average linkage") {
  // a,b close; c,d close; the two pairs far apart
  const std::vector<DigestEntry> input = {
      {"a", bits(0, 0)}, {"c", bits(100, 140)}, {"b", bits(0, 8)}, {"d", bits(100, 150)}};
  const auto set = cluster_hierarchical(input, 0.9);
  REQUIRE(set.clusters.size() == 2);
  CHECK(set.clusters[0].members == std::vector<std::string>{"a", "b"});
  CHECK(set.clusters[1].members == std::vector<std::string>{"c", "d"});
  CHECK(set.algorithm == ClusterAlgorithm::kHierarchical);
  check_partition(set, input);

  CHECK(cluster_hierarchical(input, 1.0).clusters.size() == 4);
  CHECK(cluster_hierarchical(input, 0.0).clusters.size() == 1);
}

TEST_CASE("avg_similarity is the mean of pairwise similarities") {
  DigestLookup lookup{{"a", bits(0, 0)}, {"b", bits(0, 64)}, {"c", bits(0, 128)}};
  Cluster x{0, bits(0, 0), {"a"}};
  Cluster y{1, bits(0, 64), {"b", "c"}};
  CHECK(avg_similarity(x, y, lookup) == doctest::Approx((192.0 / 256 + 128.0 / 256) / 2));
}

TEST_CASE("hierarchical cluster count is monotone in the threshold") {
  std::mt19937 rng(21);
  // four noisy families
  std::vector<DigestEntry> input;
  std::uniform_int_distribution<int> bit(0, 255);
  for (int f = 0; f < 4; ++f) {
    const auto base = bits(f * 60, f * 60 + 50);
    for (int k = 0; k < 6; ++k) {
      auto d = base;
      for (int flips = 0; flips < 10; ++flips) {
        const int b = bit(rng);
        d.bytes[31 - b / 8] ^= static_cast<std::uint8_t>(1U << (b % 8));
      }
      input.push_back({"f" + std::to_string(f) + "-" + std::to_string(k), d});
    }
  }
  std::size_t previous = 0;
  for (int step = 0; step <= 20; ++step) {
    const double theta = step / 20.0;
    const auto set = cluster_hierarchical(input, theta);
    check_partition(set, input);
    CHECK(set.clusters.size() >= previous);
    previous = set.clusters.size();
  }
  CHECK(cluster_hierarchical(input, similarity_threshold_for_distance(40)).clusters.size() == 4);
}

TEST_CASE("similarity threshold conversion") {
  CHECK(similarity_threshold_for_distance(0) == 1.0);
  CHECK(similarity_threshold_for_distance(256) == 0.0);
  CHECK(similarity_threshold_for_distance(64) == 0.75);
}

TEST_CASE("algorithm names round trip") {
  for (auto a : {ClusterAlgorithm::kGreedy, ClusterAlgorithm::kHierarchical}) {
    CHECK(parse_cluster_algorithm(to_string(a)) == a);
  }
  CHECK_FALSE(parse_cluster_algorithm("kmeans"));
}
