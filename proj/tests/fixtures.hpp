#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "mbhc/flat_em.hpp"
#include "mbhc/likelihood.hpp"
#include "mbhc/mhac.hpp"
#include "mbhc/stats.hpp"
#include "mbhc/synthgen.hpp"

namespace fixtures {

using namespace mbhc;

/// Random hard clustering of `data` into K non-empty clusters.
inline FlatClustering random_flat(const SparseDocMatrix& data, std::size_t K, const FeaturePartition& part,
                                  std::mt19937_64& rng) {
  FlatClustering f;
  f.K = K;
  f.assignments.resize(data.doc_count());
  std::uniform_int_distribution<ClusterId> pick(0, static_cast<ClusterId>(K - 1));
  for (std::size_t d = 0; d < data.doc_count(); ++d) f.assignments[d] = d < K ? static_cast<ClusterId>(d) : pick(rng);
  f.stats = stats_from_assignment(data, f.assignments, K);
  f.partition = part;
  return f;
}

/// Random subset of `from`, each element kept with probability p.
inline FeatureSet random_subset(const FeatureSet& from, std::mt19937_64& rng, double p = 0.5) {
  std::bernoulli_distribution keep(p);
  std::vector<FeatureId> out;
  for (auto j : from)
    if (keep(rng)) out.push_back(j);
  return FeatureSet(std::move(out));
}

/// Applies random merges with random eligible noise sets until one node is left.
inline Dendrogram random_hierarchy(const FlatClustering& flat, const ModelConfig& config, std::mt19937_64& rng,
                                   std::size_t merges) {
  Agglomerator agg(flat, config);
  for (std::size_t m = 0; m < merges && agg.active().size() > 1; ++m) {
    auto act = agg.active();
    std::shuffle(act.begin(), act.end(), rng);
    const auto& a = agg.node(act[0]);
    const auto& b = agg.node(act[1]);
    MergeProposal p{std::min(a.id, b.id), std::max(a.id, b.id), random_subset(eligible_noise(a, b), rng), 0.0};
    p.delta = merge_delta(a.stats, b.stats, p.noiseSet, config.alpha);
    agg.apply(p);
  }
  return agg.finish();
}

/// Small synthetic corpus with a random seed for property suites.
inline SyntheticCorpus small_corpus(const char* shape, std::uint64_t seed, std::size_t docsPerLeaf,
                                    std::size_t features = 30, std::size_t tokens = 60) {
  StructureSpec spec;
  spec.shape = parse_shape(shape);
  spec.featureCount = features;
  spec.docsPerLeaf = docsPerLeaf;
  spec.tokensPerDoc = tokens;
  spec.seed = seed;
  return sample(gen_params(spec), spec);
}

}  // namespace fixtures
