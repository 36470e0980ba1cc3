#pragma once

#include <span>

#include "mbhc/types.hpp"

namespace mbhc {

/// Thread-safe natural log of |Gamma(x)|.
double log_gamma(double x);

/// Log Multinomial-Dirichlet marginal likelihood of the counts of `s`
/// projected onto `feats`:
///   log Gamma(a0)/Gamma(a0+n) + sum_j log Gamma(a_j+t_j)/Gamma(a_j)
/// with a0 the sum of alpha over `feats`. Per-document multinomial
/// coefficients are omitted; they are constant across model structures.
LogML log_md(const ClusterStats& s, const FeatureSet& feats, const Hyperparameter& alpha);

/// The four log-factors of the flat-clustering marginal likelihood.
struct FlatFactors {
  double split = 0.0;       // Beta over the useful/noise token totals
  double noise = 0.0;       // pooled noise-block Multinomial-Dirichlet
  double membership = 0.0;  // Dirichlet-multinomial over cluster sizes
  double useful = 0.0;      // per-cluster useful-block terms

  double total() const { return split + noise + membership + useful; }
};

FlatFactors flat_factors(std::span<const ClusterStats> clusters, const FeaturePartition& partition,
                         const ModelConfig& config);

/// Log marginal likelihood of a flat clustering under a global (noise, useful) split.
LogML log_flat(std::span<const ClusterStats> clusters, const FeaturePartition& partition, const ModelConfig& config);

/// Change in log marginal likelihood when the counts of `a` and `b` on
/// `noiseSet` are modeled by one shared distribution instead of two.
/// Depends only on the projections of the two clusters onto `noiseSet`.
/// Returns 0 for an empty or single-feature noise set.
double merge_delta(const ClusterStats& a, const ClusterStats& b, const FeatureSet& noiseSet,
                   const Hyperparameter& alpha);

/// Log marginal likelihood of a whole hierarchy, recomputed from node statistics.
///
/// The root-level flat factors (split, global noise, membership) are taken
/// over the leaves. Every node k then contributes
///   log_md(k, eligible_k) - log_md(k, N_parent(k))
/// where eligible_k is U for a leaf and the merge noise set for an internal
/// node. With no merges this equals log_flat over the leaves.
LogML log_hierarchy(const Dendrogram& d, const FeaturePartition& partition, const ModelConfig& config);

}  // namespace mbhc
