#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "mbhc/flat_em.hpp"
#include "mbhc/types.hpp"

namespace mbhc {

struct MergeProposal {
  NodeId left = 0;
  NodeId right = 0;
  FeatureSet noiseSet;
  double delta = 0.0;

  friend bool operator==(const MergeProposal&, const MergeProposal&) = default;
};

struct NoiseSelection {
  FeatureSet noiseSet;
  double delta = 0.0;
};

/// Features that may still become shared noise when merging `a` and `b`.
FeatureSet eligible_noise(const HierarchyNode& a, const HierarchyNode& b);

/// Greedy search for the shared feature subset of a merge.
///
/// Eligible features are ranked by |xi_a - xi_b|, where xi is the token
/// share of the feature within the eligible subspace of each cluster (ties:
/// lower id first). Prefixes of that ranking are scored with merge_delta.
/// StopAtFirstDecrease keeps the prefix before the first drop; BestPrefix keeps
/// the best prefix. A chosen delta <= 0 yields (empty set, 0).
NoiseSelection greedy_noise_selection(const ClusterStats& a, const ClusterStats& b, const FeatureSet& eligible,
                                      const ModelConfig& config);

/// Scores one candidate pair according to config.mode.
MergeProposal propose_merge(const HierarchyNode& a, const HierarchyNode& b, const ModelConfig& config);

/// Best proposal among all unordered pairs of `active`. In feature-selection
/// mode only a strictly positive delta qualifies; in no-FS mode the maximal
/// delta wins regardless of sign. Ties: smaller left id, then smaller right id.
std::optional<MergeProposal> best_merge(std::span<const HierarchyNode> active, const ModelConfig& config);

/// Bottom-up merge state over the flat clusters. Pair scores are memoized:
/// nodes never change once created, so a pair is scored at most once.
class Agglomerator {
 public:
  Agglomerator(const FlatClustering& flat, const ModelConfig& config);

  const std::vector<NodeId>& active() const { return active_; }
  const HierarchyNode& node(NodeId id) const { return nodes_.at(id); }

  MergeProposal propose(NodeId a, NodeId b);
  std::optional<MergeProposal> best();
  /// Creates the merged node and returns its id.
  NodeId apply(const MergeProposal& proposal);
  /// Closes the tree, adding a synthetic root when several nodes remain.
  Dendrogram finish() const;

 private:
  ModelConfig config_;
  std::map<NodeId, HierarchyNode> nodes_;
  std::vector<NodeId> active_;
  std::vector<MergeRecord> trace_;
  std::map<std::pair<NodeId, NodeId>, MergeProposal> cache_;
  NodeId nextId_ = 0;
};

/// Agglomerates the flat clusters until no merge improves the likelihood
/// (feature-selection mode) or a single root remains (no-FS mode).
Dendrogram run_mhac(const FlatClustering& flat, const ModelConfig& config);

/// Replays a fixed sequence of pair merges with the configured noise
/// selection. Pairs refer to leaf ids and to ids of earlier merges in order.
Dendrogram run_mhac_forced(const FlatClustering& flat, const ModelConfig& config,
                           std::span<const std::pair<NodeId, NodeId>> sequence);

/// Sum of the merge-trace deltas.
double trace_gain(const Dendrogram& d);

}  // namespace mbhc
