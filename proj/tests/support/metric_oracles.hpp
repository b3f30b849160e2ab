#pragma once

// Brute-force clustering metrics. Written per item and per pair rather than
// from a contingency table so they share no code path with evalmetrics.

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

namespace oracle {

inline double purity(const std::vector<int>& clusters, const std::vector<int>& classes) {
  const std::size_t n = clusters.size();
  std::map<int, bool> seen;
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[clusters[i]]) continue;
    seen[clusters[i]] = true;
    std::size_t best = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (clusters[j] != clusters[i]) continue;
      std::size_t same = 0;
      for (std::size_t k = 0; k < n; ++k) same += (clusters[k] == clusters[i] && classes[k] == classes[j]);
      if (same > best) best = same;
    }
    total += best;
  }
  return static_cast<double>(total) / static_cast<double>(n);
}

// Pair-counting form of the Hubert-Arabie index.
inline double ari(const std::vector<int>& clusters, const std::vector<int>& classes) {
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    for (std::size_t j = i + 1; j < clusters.size(); ++j) {
      const bool same_k = clusters[i] == clusters[j];
      const bool same_c = classes[i] == classes[j];
      if (same_k && same_c) n11 += 1;
      else if (same_k) n10 += 1;
      else if (same_c) n01 += 1;
      else n00 += 1;
    }
  }
  const double den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
  if (den == 0) return 0.0;
  return 2.0 * (n00 * n11 - n01 * n10) / den;
}

struct Info {
  double nmi, homogeneity, completeness, v_measure;
};

// Entropies as per-item averages of -log p.
inline Info info(const std::vector<int>& clusters, const std::vector<int>& classes) {
  const double n = static_cast<double>(clusters.size());
  auto count_if = [&](auto pred) {
    double c = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) c += pred(i) ? 1 : 0;
    return c;
  };
  double hc = 0, hk = 0, hc_k = 0, hk_c = 0, mi = 0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const double nc = count_if([&](std::size_t j) { return classes[j] == classes[i]; });
    const double nk = count_if([&](std::size_t j) { return clusters[j] == clusters[i]; });
    const double nck =
        count_if([&](std::size_t j) { return classes[j] == classes[i] && clusters[j] == clusters[i]; });
    hc -= std::log(nc / n) / n;
    hk -= std::log(nk / n) / n;
    hc_k -= std::log(nck / nk) / n;
    hk_c -= std::log(nck / nc) / n;
    mi += std::log(n * nck / (nc * nk)) / n;
  }
  Info r{};
  r.homogeneity = hc == 0 ? 1.0 : 1.0 - hc_k / hc;
  r.completeness = hk == 0 ? 1.0 : 1.0 - hk_c / hk;
  r.v_measure = r.homogeneity + r.completeness == 0
                    ? 0.0
                    : 2 * r.homogeneity * r.completeness / (r.homogeneity + r.completeness);
  if (hc == 0 && hk == 0) r.nmi = 1.0;
  else if (hc == 0 || hk == 0) r.nmi = 0.0;
  else r.nmi = mi / std::sqrt(hc * hk);
  return r;
}

}  // namespace oracle
