#pragma once

#include <cstdint>
#include <vector>

#include "mbhc/types.hpp"

namespace mbhc {

/// Hard partition of the corpus produced by the flat stage.
struct FlatClustering {
  std::size_t K = 0;
  std::vector<ClusterId> assignments;
  std::vector<ClusterStats> stats;
  FeaturePartition partition;
  LogML score = 0.0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  /// Clusters emptied during EM and removed from the result.
  std::size_t droppedClusters = 0;

  friend bool operator==(const FlatClustering&, const FlatClustering&) = default;
};

/// K distinct seed documents chosen k-means++ style (weights are the squared
/// KL divergence from the nearest seed so far) become the initial cluster
/// centers (smoothed over `useful`); every document goes to its most likely
/// center and each seed document stays in its own cluster.
/// Throws InputError unless 1 <= K <= docCount.
std::vector<ClusterId> init_assignments(const SparseDocMatrix& data, std::size_t K, std::uint64_t seed,
                                        const ModelConfig& config, const FeatureSet& useful);
std::vector<ClusterId> init_assignments(const SparseDocMatrix& data, std::size_t K, std::uint64_t seed,
                                        const ModelConfig& config);

/// Hard-assignment EM from a seeded start. Empty clusters are dropped at the
/// end, so the returned K may be smaller than requested.
FlatClustering em_run(const SparseDocMatrix& data, std::size_t K, const FeaturePartition& partition,
                      const ModelConfig& config, std::uint64_t seed);

/// Runs em_run for every K in [kMin, kMax] (capped at the document count)
/// and restart r with seed config.seed + r, keeping the best score.
/// Ties go to the smaller K, then the smaller seed.
FlatClustering select_k(const SparseDocMatrix& data, const FeaturePartition& partition, const ModelConfig& config);

/// Greedy root-level noise search. Features are ranked by how far their
/// per-cluster token shares stray from the corpus-wide share; prefixes of the
/// least discriminative features are moved to the noise set and the
/// partition with the highest flat likelihood is returned.
FeaturePartition root_noise_search(const SparseDocMatrix& data, const FlatClustering& clustering,
                                   const ModelConfig& config);

/// Rescores `clustering` under a new partition.
FlatClustering with_partition(FlatClustering clustering, FeaturePartition partition, const ModelConfig& config);

}  // namespace mbhc
