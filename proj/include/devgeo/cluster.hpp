#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "devgeo/digest.hpp"

namespace devgeo {

enum class ClusterAlgorithm { kGreedy, kHierarchical };

std::string_view to_string(ClusterAlgorithm a);
std::optional<ClusterAlgorithm> parse_cluster_algorithm(std::string_view s);

/// Which existing cluster a page joins under greedy assignment.
enum class GreedyJoinRule { kFirstWithinThreshold, kNearestWithinThreshold };

struct DigestEntry {
  std::string page_id;
  StructuralDigest digest;
};

struct Cluster {
  int cluster_id = 0;
  StructuralDigest representative;
  std::vector<std::string> members;  // input order

  bool is_singleton() const { return members.size() == 1; }
};

struct ClusterSet {
  std::vector<Cluster> clusters;
  ClusterAlgorithm algorithm = ClusterAlgorithm::kGreedy;
  // Greedy runs record the distance threshold; hierarchical runs record the
  // similarity threshold and, when derived from one, the distance it came from.
  std::optional<int> distance_threshold;
  double similarity_threshold = 0.0;

  std::size_t singleton_count() const;
  std::size_t valid_count() const { return clusters.size() - singleton_count(); }
  /// page_id -> cluster_id
  std::map<std::string, int> assignments() const;
};

/// Single pass in input order. Throws std::invalid_argument if the
/// threshold lies outside [0, 256].
ClusterSet cluster_greedy(const std::vector<DigestEntry>& digests, int threshold_distance,
                          GreedyJoinRule rule = GreedyJoinRule::kFirstWithinThreshold);

using DigestLookup = std::map<std::string, StructuralDigest, std::less<>>;

/// Mean pairwise similarity across the two clusters' members.
double avg_similarity(const Cluster& a, const Cluster& b, const DigestLookup& digests);

/// Average-linkage agglomeration from singletons while the best pair's
/// average similarity is at least `threshold_similarity`.
ClusterSet cluster_hierarchical(const std::vector<DigestEntry>& digests, double threshold_similarity);

inline double similarity_threshold_for_distance(int threshold_distance) {
  return 1.0 - static_cast<double>(threshold_distance) / kDigestBits;
}

}  // namespace devgeo
