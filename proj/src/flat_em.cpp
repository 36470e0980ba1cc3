#include "mbhc/flat_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "mbhc/kernels.hpp"
#include "mbhc/likelihood.hpp"
#include "mbhc/stats.hpp"

namespace mbhc {

std::vector<ClusterId> init_assignments(const SparseDocMatrix& data, std::size_t K, std::uint64_t seed,
                                        const ModelConfig& config, const FeatureSet& useful) {
  const std::size_t nu = data.doc_count();
  if (K < 1 || K > nu)
    throw InputError("cannot seed K=" + std::to_string(K) + " clusters from " + std::to_string(nu) + " documents");

  // Seed documents, k-means++ style: the first is uniform, each further one is
  // drawn with weight equal to its squared KL divergence (over the useful
  // features) from the nearest smoothed seed so far.
  const std::size_t M = data.feature_count();
  const double a0 = config.alpha.sum_over(useful);
  std::vector<double> usefulTokens(nu, 0.0);
  for (DocId d = 0; d < nu; ++d)
    for (const auto& tc : data.row(d))
      if (useful.contains(tc.feature)) usefulTokens[d] += static_cast<double>(tc.count);

  std::vector<double> nearest(nu, std::numeric_limits<double>::infinity());
  std::vector<char> taken(nu, 0);
  std::vector<DocId> order;
  order.reserve(K);
  std::vector<double> logTheta(M);
  std::mt19937_64 rng(seed);
  order.push_back(std::uniform_int_distribution<DocId>(0, static_cast<DocId>(nu - 1))(rng));
  taken[order.back()] = 1;
  while (order.size() < K) {
    const auto row = data.row(order.back());
    const double n = usefulTokens[order.back()];
    for (auto j : useful) logTheta[j] = std::log(config.alpha.at(j) / (n + a0));
    for (const auto& tc : row)
      if (useful.contains(tc.feature))
        logTheta[tc.feature] = std::log((static_cast<double>(tc.count) + config.alpha.at(tc.feature)) / (n + a0));
    double total = 0.0;
    for (DocId d = 0; d < nu; ++d) {
      if (taken[d]) continue;
      double kl = 0.0;
      if (usefulTokens[d] > 0)
        for (const auto& tc : data.row(d)) {
          if (!useful.contains(tc.feature)) continue;
          const double p = static_cast<double>(tc.count) / usefulTokens[d];
          kl += p * (std::log(p) - logTheta[tc.feature]);
        }
      nearest[d] = std::min(nearest[d], kl > 0.0 ? kl * kl : 0.0);
      total += nearest[d];
    }
    DocId next = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      next = nu;
      for (DocId d = 0; d < nu; ++d) {
        if (taken[d] || nearest[d] <= 0.0) continue;
        next = d;
        if ((u -= nearest[d]) < 0.0) break;
      }
    } else {
      // Every remaining document coincides with a seed: pick uniformly.
      std::vector<DocId> rest;
      for (DocId d = 0; d < nu; ++d)
        if (!taken[d]) rest.push_back(d);
      next = rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
    }
    order.push_back(next);
    taken[next] = 1;
  }

  std::vector<ClusterStats> centers;
  centers.reserve(K);
  for (std::size_t k = 0; k < K; ++k) centers.push_back(ClusterStats::from_row(data.row(order[k])));
  kernels::EStepModel model(centers, useful, config, data.feature_count(), /*uniformWeights=*/true);

  std::vector<ClusterId> assign(nu, 0);
  kernels::estep(data, model, assign, config.exec);
  for (std::size_t k = 0; k < K; ++k) assign[order[k]] = static_cast<ClusterId>(k);
  return assign;
}

std::vector<ClusterId> init_assignments(const SparseDocMatrix& data, std::size_t K, std::uint64_t seed,
                                        const ModelConfig& config) {
  return init_assignments(data, K, seed, config, FeatureSet::range(data.feature_count()));
}

FlatClustering em_run(const SparseDocMatrix& data, std::size_t K, const FeaturePartition& partition,
                      const ModelConfig& config, std::uint64_t seed) {
  auto assign = init_assignments(data, K, seed, config, partition.useful);
  const double tolerance = config.emTol * static_cast<double>(data.doc_count());

  std::size_t iterations = 0;
  while (iterations < config.emMaxIters) {
    auto stats = stats_from_assignment(data, assign, K);
    kernels::EStepModel model(stats, partition.useful, config, data.feature_count());
    auto changed = kernels::estep(data, model, assign, config.exec);
    ++iterations;
    if (static_cast<double>(changed) <= tolerance) break;
  }

  // Compact away empty clusters, keeping the relative order of the rest.
  std::vector<Count> sizes(K, 0);
  for (auto k : assign) ++sizes[k];
  std::vector<ClusterId> relabel(K, 0);
  ClusterId used = 0;
  for (std::size_t k = 0; k < K; ++k)
    if (sizes[k] > 0) relabel[k] = used++;
  for (auto& k : assign) k = relabel[k];

  FlatClustering out;
  out.K = used;
  out.assignments = std::move(assign);
  out.stats = stats_from_assignment(data, out.assignments, out.K);
  out.partition = partition;
  out.score = log_flat(out.stats, partition, config);
  out.seed = seed;
  out.iterations = iterations;
  out.droppedClusters = K - used;
  return out;
}

FlatClustering select_k(const SparseDocMatrix& data, const FeaturePartition& partition, const ModelConfig& config) {
  config.validate(data.feature_count());
  partition.validate(data.feature_count());
  const std::size_t kHi = std::min(config.kMax, data.doc_count());
  if (config.kMin > kHi) throw InputError("k-range has no value <= document count");

  struct Job {
    std::size_t K;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t K = config.kMin; K <= kHi; ++K)
    for (std::size_t r = 0; r < config.restarts; ++r) jobs.push_back({K, config.seed + r});

  std::vector<FlatClustering> runs(jobs.size());
  const auto n = static_cast<std::int64_t>(jobs.size());
  if (config.exec == Exec::Parallel && n > 1) {
    ModelConfig inner = config;
    inner.exec = Exec::Serial;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) runs[i] = em_run(data, jobs[i].K, partition, inner, jobs[i].seed);
  } else {
    for (std::int64_t i = 0; i < n; ++i) runs[i] = em_run(data, jobs[i].K, partition, config, jobs[i].seed);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const auto& a = runs[i];
    const auto& b = runs[best];
    if (a.score > b.score || (a.score == b.score && (a.K < b.K || (a.K == b.K && a.seed < b.seed)))) best = i;
  }
  return std::move(runs[best]);
}

FlatClustering with_partition(FlatClustering clustering, FeaturePartition partition, const ModelConfig& config) {
  clustering.partition = std::move(partition);
  clustering.score = log_flat(clustering.stats, clustering.partition, config);
  return clustering;
}

namespace {

// Incrementally maintained flat likelihood while features move from U to N.
class PartitionScan {
 public:
  PartitionScan(const FlatClustering& c, const ModelConfig& config, std::size_t featureCount)
      : config_(config), K_(c.stats.size()), columns_(featureCount), clusterUseful_(K_, 0), clusterSum_(K_, 0.0) {
    for (std::size_t k = 0; k < K_; ++k)
      for (const auto& tc : c.stats[k].term_counts()) columns_[tc.feature].push_back({static_cast<FeatureId>(k), tc.count});
    for (const auto& col : columns_) {
      Count t = 0;
      for (const auto& e : col) t += e.count;
      totals_.push_back(t);
    }
    std::vector<ClusterStats> sizesOnly;
    for (const auto& s : c.stats) sizesOnly.emplace_back(std::vector<TermCount>{}, s.doc_count());
    membership_ = flat_factors(sizesOnly, FeaturePartition{}, config).membership;

    for (auto j : c.partition.noise) add_noise_block(j);
    for (auto j : c.partition.useful) {
      usefulA0_ += config.alpha.at(j);
      tU_ += totals_[j];
      for (const auto& e : columns_[j]) {
        clusterUseful_[e.feature] += e.count;
        clusterSum_[e.feature] += ratio(config.alpha.at(j), e.count);
      }
      ++usefulCount_;
    }
  }

  void move_to_noise(FeatureId j) {
    usefulA0_ -= config_.alpha.at(j);
    tU_ -= totals_[j];
    for (const auto& e : columns_[j]) {
      clusterUseful_[e.feature] -= e.count;
      clusterSum_[e.feature] -= ratio(config_.alpha.at(j), e.count);
    }
    --usefulCount_;
    add_noise_block(j);
  }

  double value() const {
    double v = membership_;
    if (noiseCount_ > 0) {
      const double gu = config_.gammaU, gn = config_.gammaN;
      const auto tu = static_cast<double>(tU_), tn = static_cast<double>(tN_);
      v += log_gamma(gu + gn) + log_gamma(gu + tu) - log_gamma(gu) + log_gamma(gn + tn) - log_gamma(gn) -
           log_gamma(gu + tu + gn + tn);
      v += noiseSum_ - (log_gamma(noiseB0_ + tn) - log_gamma(noiseB0_));
    }
    if (usefulCount_ > 0) {
      for (std::size_t k = 0; k < K_; ++k) {
        const auto n = static_cast<double>(clusterUseful_[k]);
        v += clusterSum_[k] - (log_gamma(usefulA0_ + n) - log_gamma(usefulA0_));
      }
    }
    return v;
  }

 private:
  static double ratio(double a, Count n) { return log_gamma(a + static_cast<double>(n)) - log_gamma(a); }

  void add_noise_block(FeatureId j) {
    noiseB0_ += config_.beta.at(j);
    tN_ += totals_[j];
    noiseSum_ += ratio(config_.beta.at(j), totals_[j]);
    ++noiseCount_;
  }

  const ModelConfig& config_;
  std::size_t K_;
  std::vector<std::vector<TermCount>> columns_;  // (cluster, count) per feature
  std::vector<Count> totals_;
  double membership_ = 0.0;
  double usefulA0_ = 0.0;
  Count tU_ = 0;
  std::size_t usefulCount_ = 0;
  std::vector<Count> clusterUseful_;
  std::vector<double> clusterSum_;
  double noiseB0_ = 0.0;
  Count tN_ = 0;
  double noiseSum_ = 0.0;
  std::size_t noiseCount_ = 0;
};

}  // namespace

FeaturePartition root_noise_search(const SparseDocMatrix& data, const FlatClustering& clustering,
                                   const ModelConfig& config) {
  const std::size_t M = data.feature_count();
  clustering.partition.validate(M);
  if (clustering.stats.empty()) throw InputError("root noise search needs a non-empty clustering");

  ClusterStats pooled;
  for (const auto& s : clustering.stats) pooled = add_stats(pooled, s);
  const auto T = static_cast<double>(pooled.total_tokens());

  std::vector<std::pair<double, FeatureId>> ranked;
  for (auto j : clustering.partition.useful) {
    const double g = T > 0 ? static_cast<double>(pooled.count(j)) / T : 0.0;
    double key = 0.0;
    for (const auto& s : clustering.stats) {
      const double share = s.total_tokens() > 0 ? static_cast<double>(s.count(j)) / static_cast<double>(s.total_tokens()) : 0.0;
      key = std::max(key, std::abs(share - g));
    }
    ranked.emplace_back(key, j);
  }
  std::sort(ranked.begin(), ranked.end());
  if (ranked.empty()) return clustering.partition;

  const bool allTie = ranked.front().first == ranked.back().first;
  if (allTie) {
    auto allNoise = FeaturePartition::with_noise(FeatureSet::range(M), M);
    double keep = log_flat(clustering.stats, clustering.partition, config);
    double flip = log_flat(clustering.stats, allNoise, config);
    return flip > keep ? allNoise : clustering.partition;
  }

  PartitionScan scan(clustering, config, M);
  double bestValue = scan.value();
  std::size_t bestLen = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    scan.move_to_noise(ranked[i].second);
    double v = scan.value();
    if (v > bestValue) {
      bestValue = v;
      bestLen = i + 1;
    }
  }
  std::vector<FeatureId> moved;
  for (std::size_t i = 0; i < bestLen; ++i) moved.push_back(ranked[i].second);
  return FeaturePartition::with_noise(clustering.partition.noise | FeatureSet(std::move(moved)), M);
}

}  // namespace mbhc
