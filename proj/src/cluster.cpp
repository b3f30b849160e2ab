#include "devgeo/cluster.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace devgeo {

std::string_view to_string(ClusterAlgorithm a) {
  return a == ClusterAlgorithm::kGreedy ? "greedy" : "hierarchical";
}

std::optional<ClusterAlgorithm> parse_cluster_algorithm(std::string_view s) {
  if (s == "greedy") return ClusterAlgorithm::kGreedy;
  if (s == "hierarchical") return ClusterAlgorithm::kHierarchical;
  return std::nullopt;
}

std::size_t ClusterSet::singleton_count() const {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.is_singleton() ? 1 : 0;
  return n;
}

std::map<std::string, int> ClusterSet::assignments() const {
  std::map<std::string, int> out;
  for (const auto& c : clusters) {
    for (const auto& m : c.members) out[m] = c.cluster_id;
  }
  return out;
}

ClusterSet cluster_greedy(const std::vector<DigestEntry>& digests, int threshold_distance, GreedyJoinRule rule) {
  if (threshold_distance < 0 || threshold_distance > kDigestBits) {
    throw std::invalid_argument("distance threshold must lie in [0, 256]");
  }
  ClusterSet out;
  out.algorithm = ClusterAlgorithm::kGreedy;
  out.distance_threshold = threshold_distance;
  out.similarity_threshold = similarity_threshold_for_distance(threshold_distance);

  // Representatives are kept contiguous so each page is one batch kernel call.
  std::vector<StructuralDigest> representatives;
  std::vector<std::uint16_t> distances;
  for (const auto& entry : digests) {
    distances.resize(representatives.size());
    hamming_distances(entry.digest, representatives, distances);
    std::size_t chosen = representatives.size();
    int best = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < representatives.size(); ++i) {
      const int d = distances[i];
      if (d > threshold_distance) continue;
      if (rule == GreedyJoinRule::kFirstWithinThreshold) {
        chosen = i;
        break;
      }
      if (d < best) {
        best = d;
        chosen = i;
      }
    }
    if (chosen == representatives.size()) {
      Cluster c;
      c.cluster_id = static_cast<int>(out.clusters.size());
      c.representative = entry.digest;
      c.members.push_back(entry.page_id);
      out.clusters.push_back(std::move(c));
      representatives.push_back(entry.digest);
    } else {
      out.clusters[chosen].members.push_back(entry.page_id);
    }
  }
  return out;
}

double avg_similarity(const Cluster& a, const Cluster& b, const DigestLookup& digests) {
  if (a.members.empty() || b.members.empty()) throw std::invalid_argument("avg_similarity on empty cluster");
  auto lookup = [&](const std::string& id) -> const StructuralDigest& {
    auto it = digests.find(id);
    if (it == digests.end()) throw std::out_of_range("no digest for page " + id);
    return it->second;
  };
  double sum = 0.0;
  for (const auto& x : a.members) {
    const auto& dx = lookup(x);
    for (const auto& y : b.members) sum += similarity(dx, lookup(y));
  }
  return sum / (static_cast<double>(a.members.size()) * static_cast<double>(b.members.size()));
}

ClusterSet cluster_hierarchical(const std::vector<DigestEntry>& digests, double threshold_similarity) {
  if (!(threshold_similarity >= 0.0 && threshold_similarity <= 1.0)) {
    throw std::invalid_argument("similarity threshold must lie in [0, 1]");
  }
  const std::size_t n = digests.size();
  ClusterSet out;
  out.algorithm = ClusterAlgorithm::kHierarchical;
  out.similarity_threshold = threshold_similarity;
  if (n == 0) return out;

  // Linkage is tracked as the integer sum of cross-pair distances, so
  // AvgSim(a, b) = 1 - sum / (|a| |b| 256) compares exactly.
  std::vector<StructuralDigest> flat(n);
  for (std::size_t i = 0; i < n; ++i) flat[i] = digests[i].digest;
  std::vector<std::vector<std::int64_t>> link(n, std::vector<std::int64_t>(n, 0));
  std::vector<std::uint16_t> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    hamming_distances(flat[i], flat, row);
    for (std::size_t j = 0; j < n; ++j) link[i][j] = row[j];
  }

  std::vector<std::size_t> size(n, 1);
  std::vector<bool> alive(n, true);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i].push_back(i);

  while (true) {
    std::size_t best_a = n, best_b = n;
    // best mean distance as a fraction num/den
    std::int64_t best_num = 0, best_den = 1;
    for (std::size_t a = 0; a < n; ++a) {
      if (!alive[a]) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!alive[b]) continue;
        const std::int64_t num = link[a][b];
        const std::int64_t den = static_cast<std::int64_t>(size[a] * size[b]);
        // strictly smaller mean distance wins; scanning order resolves ties
        if (best_a == n || num * best_den < best_num * den) {
          best_a = a;
          best_b = b;
          best_num = num;
          best_den = den;
        }
      }
    }
    if (best_a == n) break;
    const double best_sim = 1.0 - static_cast<double>(best_num) / (static_cast<double>(best_den) * kDigestBits);
    if (best_sim < threshold_similarity) break;

    for (std::size_t c = 0; c < n; ++c) {
      if (!alive[c] || c == best_a || c == best_b) continue;
      link[best_a][c] += link[best_b][c];
      link[c][best_a] = link[best_a][c];
    }
    size[best_a] += size[best_b];
    alive[best_b] = false;
    members[best_a].insert(members[best_a].end(), members[best_b].begin(), members[best_b].end());
    members[best_b].clear();
  }

  for (std::size_t a = 0; a < n; ++a) {
    if (!alive[a]) continue;
    std::sort(members[a].begin(), members[a].end());
    Cluster c;
    c.cluster_id = static_cast<int>(out.clusters.size());
    c.representative = digests[members[a].front()].digest;
    for (auto idx : members[a]) c.members.push_back(digests[idx].page_id);
    out.clusters.push_back(std::move(c));
  }
  return out;
}

}  // namespace devgeo
