#include "mbhc/mhac.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "mbhc/kernels.hpp"
#include "mbhc/likelihood.hpp"
#include "mbhc/stats.hpp"

namespace mbhc {

FeatureSet eligible_noise(const HierarchyNode& a, const HierarchyNode& b) { return a.eligible & b.eligible; }

NoiseSelection greedy_noise_selection(const ClusterStats& a, const ClusterStats& b, const FeatureSet& eligible,
                                      const ModelConfig& config) {
  if (eligible.empty()) return {};

  struct Candidate {
    double gap;
    FeatureId feature;
    Count xa;
    Count xb;
  };
  const auto ta = static_cast<double>(projected_total(a, eligible));
  const auto tb = static_cast<double>(projected_total(b, eligible));
  std::vector<Candidate> ranked;
  ranked.reserve(eligible.size());
  for (auto j : eligible) {
    Count xa = a.count(j), xb = b.count(j);
    double sa = ta > 0 ? static_cast<double>(xa) / ta : 0.0;
    double sb = tb > 0 ? static_cast<double>(xb) / tb : 0.0;
    ranked.push_back({std::abs(sa - sb), j, xa, xb});
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const Candidate& l, const Candidate& r) { return std::tie(l.gap, l.feature) < std::tie(r.gap, r.feature); });

  // Running merge_delta over growing prefixes.
  double a0 = 0.0, terms = 0.0;
  Count ca = 0, cb = 0;
  auto prefix_delta = [&](const Candidate& c, std::size_t length) {
    const double aj = config.alpha.at(c.feature);
    a0 += aj;
    ca += c.xa;
    cb += c.xb;
    if (c.xa > 0 && c.xb > 0)
      terms += log_gamma(aj + static_cast<double>(c.xa + c.xb)) + log_gamma(aj) -
               log_gamma(aj + static_cast<double>(c.xa)) - log_gamma(aj + static_cast<double>(c.xb));
    if (length < 2 || ca == 0 || cb == 0) return 0.0;
    return log_gamma(a0 + static_cast<double>(ca)) + log_gamma(a0 + static_cast<double>(cb)) - log_gamma(a0) -
           log_gamma(a0 + static_cast<double>(ca + cb)) + terms;
  };

  std::size_t chosen = 0;
  double chosenDelta = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    double d = prefix_delta(ranked[i], i + 1);
    if (config.prefixRule == PrefixRule::StopAtFirstDecrease) {
      if (d < chosenDelta) break;
      chosenDelta = d;
      chosen = i + 1;
    } else if (d > chosenDelta) {
      chosenDelta = d;
      chosen = i + 1;
    }
  }
  if (chosen == 0 || !(chosenDelta > 0.0)) return {};

  std::vector<FeatureId> ids;
  ids.reserve(chosen);
  for (std::size_t i = 0; i < chosen; ++i) ids.push_back(ranked[i].feature);
  FeatureSet noise(std::move(ids));
  double delta = merge_delta(a, b, noise, config.alpha);
  if (!(delta > 0.0)) return {};
  return {std::move(noise), delta};
}

MergeProposal propose_merge(const HierarchyNode& a, const HierarchyNode& b, const ModelConfig& config) {
  MergeProposal p;
  p.left = std::min(a.id, b.id);
  p.right = std::max(a.id, b.id);
  auto eligible = eligible_noise(a, b);
  if (config.mode == MergeMode::NoFeatureSelection) {
    p.delta = merge_delta(a.stats, b.stats, eligible, config.alpha);
    p.noiseSet = std::move(eligible);
  } else {
    auto sel = greedy_noise_selection(a.stats, b.stats, eligible, config);
    p.noiseSet = std::move(sel.noiseSet);
    p.delta = sel.delta;
  }
  return p;
}

namespace {

bool better(const MergeProposal& p, const MergeProposal& incumbent) {
  if (p.delta != incumbent.delta) return p.delta > incumbent.delta;
  return std::tie(p.left, p.right) < std::tie(incumbent.left, incumbent.right);
}

std::optional<MergeProposal> reduce(std::vector<MergeProposal> proposals, const ModelConfig& config) {
  std::optional<MergeProposal> best;
  for (auto& p : proposals) {
    if (config.mode == MergeMode::FeatureSelection && !(p.delta > 0.0)) continue;
    if (!best || better(p, *best)) best = std::move(p);
  }
  return best;
}

}  // namespace

std::optional<MergeProposal> best_merge(std::span<const HierarchyNode> active, const ModelConfig& config) {
  std::vector<kernels::PairTask> tasks;
  for (std::size_t i = 0; i < active.size(); ++i)
    for (std::size_t j = i + 1; j < active.size(); ++j) tasks.push_back({&active[i], &active[j]});
  return reduce(kernels::evaluate_pairs(tasks, config, config.exec), config);
}

Agglomerator::Agglomerator(const FlatClustering& flat, const ModelConfig& config) : config_(config) {
  if (flat.K < 1 || flat.stats.size() != flat.K) throw InputError("hierarchy needs a flat clustering with K >= 1");
  for (NodeId k = 0; k < flat.K; ++k) {
    HierarchyNode leaf;
    leaf.id = k;
    leaf.eligible = flat.partition.useful;
    leaf.stats = flat.stats[k];
    nodes_.emplace(k, std::move(leaf));
    active_.push_back(k);
  }
  for (DocId d = 0; d < flat.assignments.size(); ++d) {
    auto k = flat.assignments[d];
    if (k >= flat.K) throw InputError("flat assignment out of range");
    nodes_.at(k).memberDocs.push_back(d);
  }
  nextId_ = static_cast<NodeId>(flat.K);
}

MergeProposal Agglomerator::propose(NodeId a, NodeId b) {
  if (!nodes_.count(a) || !nodes_.count(b)) throw InputError("proposal references an unknown node");
  auto key = std::minmax(a, b);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  auto p = propose_merge(nodes_.at(a), nodes_.at(b), config_);
  cache_.emplace(key, p);
  return p;
}

std::optional<MergeProposal> Agglomerator::best() {
  std::vector<kernels::PairTask> fresh;
  for (std::size_t i = 0; i < active_.size(); ++i)
    for (std::size_t j = i + 1; j < active_.size(); ++j)
      if (!cache_.count({active_[i], active_[j]})) fresh.push_back({&nodes_.at(active_[i]), &nodes_.at(active_[j])});
  auto scored = kernels::evaluate_pairs(fresh, config_, config_.exec);
  for (auto& p : scored) cache_.emplace(std::pair{p.left, p.right}, std::move(p));

  std::vector<MergeProposal> all;
  for (std::size_t i = 0; i < active_.size(); ++i)
    for (std::size_t j = i + 1; j < active_.size(); ++j) all.push_back(cache_.at({active_[i], active_[j]}));
  return reduce(std::move(all), config_);
}

NodeId Agglomerator::apply(const MergeProposal& p) {
  auto isActive = [&](NodeId id) { return std::find(active_.begin(), active_.end(), id) != active_.end(); };
  if (p.left == p.right || !isActive(p.left) || !isActive(p.right))
    throw InputError("merge of inactive or identical nodes");
  auto& l = nodes_.at(p.left);
  auto& r = nodes_.at(p.right);
  if (!p.noiseSet.is_subset_of(eligible_noise(l, r))) throw InvariantError("merge noise set is not eligible");

  HierarchyNode n;
  n.id = nextId_++;
  n.children = {p.left, p.right};
  n.localNoise = p.noiseSet;
  n.eligible = p.noiseSet;
  n.stats = add_stats(l.stats, r.stats);
  l.parent = n.id;
  r.parent = n.id;
  trace_.push_back({p.left, p.right, n.id, p.noiseSet, p.delta});

  std::erase(active_, p.left);
  std::erase(active_, p.right);
  active_.push_back(n.id);
  std::erase_if(cache_, [&](const auto& kv) {
    return kv.first.first == p.left || kv.first.first == p.right || kv.first.second == p.left ||
           kv.first.second == p.right;
  });
  NodeId id = n.id;
  nodes_.emplace(id, std::move(n));
  return id;
}

Dendrogram Agglomerator::finish() const {
  std::vector<HierarchyNode> leaves;
  for (const auto& [id, n] : nodes_)
    if (n.is_leaf()) leaves.push_back(n);
  return Dendrogram::replay(std::move(leaves), trace_, active_.size() > 1);
}

Dendrogram run_mhac(const FlatClustering& flat, const ModelConfig& config) {
  Agglomerator agg(flat, config);
  while (agg.active().size() > 1) {
    auto p = agg.best();
    if (!p) break;
    agg.apply(*p);
  }
  return agg.finish();
}

Dendrogram run_mhac_forced(const FlatClustering& flat, const ModelConfig& config,
                           std::span<const std::pair<NodeId, NodeId>> sequence) {
  Agglomerator agg(flat, config);
  for (auto [a, b] : sequence) agg.apply(agg.propose(a, b));
  return agg.finish();
}

double trace_gain(const Dendrogram& d) {
  double g = 0.0;
  for (const auto& m : d.mergeTrace) g += m.delta;
  return g;
}

}  // namespace mbhc
