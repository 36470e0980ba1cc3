#pragma once

// Data-parallel inner loops. Each kernel has a serial reference version and
// an OpenMP version that must produce identical results.

#include <span>
#include <vector>

#include "mbhc/mhac.hpp"
#include "mbhc/types.hpp"

namespace mbhc::kernels {

/// Smoothed log parameters (tau_kj + alpha_j) / (t_k + alpha_0) over the
/// useful features and log mixing weights (|D_k| + sigma) / (nu + K sigma).
/// Lexicons up to config.denseThreshold use a K x M table; larger ones look
/// counts up in the sparse statistics.
class EStepModel {
 public:
  EStepModel(std::span<const ClusterStats> stats, const FeatureSet& useful, const ModelConfig& config,
             std::size_t featureCount, bool uniformWeights = false);

  std::size_t cluster_count() const { return logWeight_.size(); }
  bool dense() const { return !table_.empty(); }
  double log_theta(ClusterId k, FeatureId j) const;
  double log_weight(ClusterId k) const { return logWeight_[k]; }
  double score(std::span<const TermCount> row, ClusterId k) const;
  /// Highest-scoring cluster, lowest id on ties.
  ClusterId best(std::span<const TermCount> row) const;

 private:
  std::size_t featureCount_;
  std::vector<char> useful_;
  std::vector<double> table_;
  std::vector<ClusterStats> stats_;
  std::vector<double> logDenom_;
  std::vector<double> logWeight_;
  Hyperparameter alpha_;
};

/// Reassigns every document; returns the number of changed assignments.
std::size_t estep_serial(const SparseDocMatrix& data, const EStepModel& model, std::span<ClusterId> assignments);
std::size_t estep_omp(const SparseDocMatrix& data, const EStepModel& model, std::span<ClusterId> assignments);
std::size_t estep(const SparseDocMatrix& data, const EStepModel& model, std::span<ClusterId> assignments, Exec exec);

struct PairTask {
  const HierarchyNode* left = nullptr;
  const HierarchyNode* right = nullptr;
};

/// Scores each candidate merge with propose_merge.
std::vector<MergeProposal> evaluate_pairs_serial(std::span<const PairTask> tasks, const ModelConfig& config);
std::vector<MergeProposal> evaluate_pairs_omp(std::span<const PairTask> tasks, const ModelConfig& config);
std::vector<MergeProposal> evaluate_pairs(std::span<const PairTask> tasks, const ModelConfig& config, Exec exec);

}  // namespace mbhc::kernels
