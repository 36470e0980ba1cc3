#include "mbhc/kernels.hpp"

#include <cmath>

#include <omp.h>

namespace mbhc::kernels {

namespace {

Count useful_total(const ClusterStats& s, const std::vector<char>& useful) {
  Count t = 0;
  for (const auto& tc : s.term_counts())
    if (useful[tc.feature]) t += tc.count;
  return t;
}

}  // namespace

EStepModel::EStepModel(std::span<const ClusterStats> stats, const FeatureSet& useful, const ModelConfig& config,
                       std::size_t featureCount, bool uniformWeights)
    : featureCount_(featureCount), useful_(featureCount, 0), alpha_(config.alpha) {
  for (auto j : useful) useful_.at(j) = 1;
  const double a0 = config.alpha.sum_over(useful);
  const std::size_t K = stats.size();
  Count nu = 0;
  for (const auto& s : stats) nu += s.doc_count();

  logDenom_.resize(K);
  logWeight_.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto tk = static_cast<double>(useful_total(stats[k], useful_));
    logDenom_[k] = std::log(tk + a0);
    logWeight_[k] = uniformWeights
                        ? 0.0
                        : std::log((static_cast<double>(stats[k].doc_count()) + config.sigma) /
                                   (static_cast<double>(nu) + config.sigma * static_cast<double>(K)));
  }

  if (featureCount <= config.denseThreshold) {
    table_.assign(K * featureCount, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      double* rowK = table_.data() + k * featureCount;
      for (auto j : useful) rowK[j] = std::log(alpha_.at(j)) - logDenom_[k];
      for (const auto& tc : stats[k].term_counts())
        if (useful_[tc.feature])
          rowK[tc.feature] = std::log(static_cast<double>(tc.count) + alpha_.at(tc.feature)) - logDenom_[k];
    }
  } else {
    stats_.assign(stats.begin(), stats.end());
  }
}

double EStepModel::log_theta(ClusterId k, FeatureId j) const {
  if (!useful_.at(j)) return 0.0;
  if (dense()) return table_[k * featureCount_ + j];
  return std::log(static_cast<double>(stats_[k].count(j)) + alpha_.at(j)) - logDenom_[k];
}

double EStepModel::score(std::span<const TermCount> row, ClusterId k) const {
  double s = logWeight_[k];
  if (dense()) {
    const double* rowK = table_.data() + static_cast<std::size_t>(k) * featureCount_;
    for (const auto& tc : row) s += static_cast<double>(tc.count) * rowK[tc.feature];
  } else {
    for (const auto& tc : row)
      if (useful_[tc.feature]) s += static_cast<double>(tc.count) * log_theta(k, tc.feature);
  }
  return s;
}

ClusterId EStepModel::best(std::span<const TermCount> row) const {
  ClusterId arg = 0;
  double top = score(row, 0);
  for (ClusterId k = 1; k < cluster_count(); ++k) {
    double s = score(row, k);
    if (s > top) {
      top = s;
      arg = k;
    }
  }
  return arg;
}

std::size_t estep_serial(const SparseDocMatrix& data, const EStepModel& model, std::span<ClusterId> assignments) {
  std::size_t changed = 0;
  for (DocId d = 0; d < data.doc_count(); ++d) {
    auto k = model.best(data.row(d));
    if (k != assignments[d]) ++changed;
    assignments[d] = k;
  }
  return changed;
}

std::size_t estep_omp(const SparseDocMatrix& data, const EStepModel& model, std::span<ClusterId> assignments) {
  std::size_t changed = 0;
  const auto n = static_cast<std::int64_t>(data.doc_count());
#pragma omp parallel for schedule(static) reduction(+ : changed)
  for (std::int64_t d = 0; d < n; ++d) {
    auto k = model.best(data.row(static_cast<DocId>(d)));
    if (k != assignments[d]) ++changed;
    assignments[d] = k;
  }
  return changed;
}

std::size_t estep(const SparseDocMatrix& data, const EStepModel& model, std::span<ClusterId> assignments, Exec exec) {
  return exec == Exec::Parallel ? estep_omp(data, model, assignments) : estep_serial(data, model, assignments);
}

std::vector<MergeProposal> evaluate_pairs_serial(std::span<const PairTask> tasks, const ModelConfig& config) {
  std::vector<MergeProposal> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) out.push_back(propose_merge(*t.left, *t.right, config));
  return out;
}

std::vector<MergeProposal> evaluate_pairs_omp(std::span<const PairTask> tasks, const ModelConfig& config) {
  std::vector<MergeProposal> out(tasks.size());
  const auto n = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) out[i] = propose_merge(*tasks[i].left, *tasks[i].right, config);
  return out;
}

std::vector<MergeProposal> evaluate_pairs(std::span<const PairTask> tasks, const ModelConfig& config, Exec exec) {
  return exec == Exec::Parallel ? evaluate_pairs_omp(tasks, config) : evaluate_pairs_serial(tasks, config);
}

}  // namespace mbhc::kernels
