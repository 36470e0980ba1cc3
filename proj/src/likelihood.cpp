#include "mbhc/likelihood.hpp"

#include <cmath>
#include <vector>

#include "mbhc/stats.hpp"

namespace mbhc {

namespace {

double positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) throw InputError(std::string(what) + " hyperparameter must be > 0");
  return x;
}

double log_gamma_ratio(double a, double n) { return log_gamma(a + n) - log_gamma(a); }

}  // namespace

double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

LogML log_md(const ClusterStats& s, const FeatureSet& feats, const Hyperparameter& alpha) {
  if (feats.empty()) return 0.0;
  if (alpha.perFeature.empty()) positive(alpha.value, "alpha");
  double a0 = 0.0;
  double sum = 0.0;
  Count n = 0;
  auto counts = s.term_counts();
  std::size_t i = 0;
  for (auto j : feats) {
    double aj = positive(alpha.at(j), "alpha");
    a0 += aj;
    while (i < counts.size() && counts[i].feature < j) ++i;
    if (i < counts.size() && counts[i].feature == j) {
      n += counts[i].count;
      sum += log_gamma_ratio(aj, static_cast<double>(counts[i].count));
    }
  }
  return sum - log_gamma_ratio(a0, static_cast<double>(n));
}

FlatFactors flat_factors(std::span<const ClusterStats> clusters, const FeaturePartition& partition,
                         const ModelConfig& config) {
  if (clusters.empty()) throw InputError("flat likelihood needs at least one cluster");
  FlatFactors f;
  ClusterStats pooled;
  Count nu = 0;
  for (const auto& c : clusters) {
    pooled = add_stats(pooled, c);
    nu += c.doc_count();
  }

  if (!partition.noise.empty()) {
    double gu = positive(config.gammaU, "gammaU");
    double gn = positive(config.gammaN, "gammaN");
    auto tn = static_cast<double>(projected_total(pooled, partition.noise));
    auto tu = static_cast<double>(pooled.total_tokens()) - tn;
    f.split = log_gamma(gu + gn) + log_gamma_ratio(gu, tu) + log_gamma_ratio(gn, tn) - log_gamma(gu + tu + gn + tn);
    f.noise = log_md(pooled, partition.noise, config.beta);
  }

  double sk = positive(config.sigma, "sigma");
  double sTotal = sk * static_cast<double>(clusters.size());
  f.membership = -log_gamma_ratio(sTotal, static_cast<double>(nu));
  for (const auto& c : clusters) f.membership += log_gamma_ratio(sk, static_cast<double>(c.doc_count()));

  for (const auto& c : clusters) f.useful += log_md(c, partition.useful, config.alpha);
  return f;
}

LogML log_flat(std::span<const ClusterStats> clusters, const FeaturePartition& partition, const ModelConfig& config) {
  return flat_factors(clusters, partition, config).total();
}

double merge_delta(const ClusterStats& a, const ClusterStats& b, const FeatureSet& noiseSet,
                   const Hyperparameter& alpha) {
  // A single shared feature carries no information: its conditional
  // distribution is the point mass on itself.
  if (noiseSet.size() < 2) return 0.0;
  if (alpha.perFeature.empty()) positive(alpha.value, "alpha");
  auto ca = a.term_counts();
  auto cb = b.term_counts();
  std::size_t ia = 0, ib = 0;
  double a0 = 0.0, terms = 0.0;
  Count ta = 0, tb = 0;
  for (auto j : noiseSet) {
    double aj = positive(alpha.at(j), "alpha");
    a0 += aj;
    while (ia < ca.size() && ca[ia].feature < j) ++ia;
    while (ib < cb.size() && cb[ib].feature < j) ++ib;
    Count xa = (ia < ca.size() && ca[ia].feature == j) ? ca[ia].count : 0;
    Count xb = (ib < cb.size() && cb[ib].feature == j) ? cb[ib].count : 0;
    ta += xa;
    tb += xb;
    if (xa == 0 || xb == 0) continue;  // the per-feature term is exactly zero
    // Grouped so that swapping a and b gives bit-identical results.
    terms += (log_gamma(aj + static_cast<double>(xa + xb)) + log_gamma(aj)) -
             (log_gamma(aj + static_cast<double>(xa)) + log_gamma(aj + static_cast<double>(xb)));
  }
  if (ta == 0 || tb == 0) return 0.0;
  double block = (log_gamma(a0 + static_cast<double>(ta)) + log_gamma(a0 + static_cast<double>(tb))) -
                 (log_gamma(a0) + log_gamma(a0 + static_cast<double>(ta + tb)));
  return block + terms;
}

LogML log_hierarchy(const Dendrogram& d, const FeaturePartition& partition, const ModelConfig& config) {
  std::vector<ClusterStats> leafStats;
  for (auto id : d.leaves()) leafStats.push_back(d.node(id).stats);
  auto root = flat_factors(leafStats, partition, config);
  double total = root.split + root.noise + root.membership;
  for (const auto& [id, n] : d.nodes) {
    total += log_md(n.stats, n.eligible, config.alpha);
    total -= log_md(n.stats, d.parent_noise(id), config.alpha);
  }
  return total;
}

}  // namespace mbhc
