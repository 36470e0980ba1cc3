// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "mbhc/flat_em.hpp"
#include "mbhc/kernels.hpp"
#include "mbhc/stats.hpp"
#include "mbhc/synthgen.hpp"

namespace {

using namespace mbhc;

struct Fixture {
  SyntheticCorpus corpus;
  std::vector<ClusterStats> stats;
  std::vector<HierarchyNode> nodes;
  ModelConfig config;

  explicit Fixture(std::size_t docsPerLeaf) {
    auto spec = StructureSpec::structure2();
    spec.docsPerLeaf = docsPerLeaf;
    spec.featureCount = 400;
    spec.seed = 3;
    corpus = sample(gen_params(spec), spec);
    const auto K = corpus.truth.leaf_count();
    stats = stats_from_assignment(corpus.data, corpus.truth.leafLabels, K);
    for (std::size_t k = 0; k < stats.size(); ++k) {
      HierarchyNode n;
      n.id = static_cast<NodeId>(k);
      n.eligible = FeatureSet::range(spec.featureCount);
      n.stats = stats[k];
      nodes.push_back(std::move(n));
    }
    config.prefixRule = PrefixRule::BestPrefix;
  }

  std::vector<kernels::PairTask> pairs() const {
    std::vector<kernels::PairTask> out;
    for (std::size_t a = 0; a < nodes.size(); ++a)
      for (std::size_t b = a + 1; b < nodes.size(); ++b) out.push_back({&nodes[a], &nodes[b]});
    return out;
  }
};

const Fixture& fixture() {
  static const Fixture f(2000);
  return f;
}

void estep_bench(benchmark::State& state, Exec exec) {
  const auto& f = fixture();
  kernels::EStepModel model(f.stats, FeatureSet::range(f.corpus.data.feature_count()), f.config,
                            f.corpus.data.feature_count());
  std::vector<ClusterId> assignments(f.corpus.data.doc_count(), 0);
  for (auto _ : state) {
    std::fill(assignments.begin(), assignments.end(), 0);
    benchmark::DoNotOptimize(kernels::estep(f.corpus.data, model, assignments, exec));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(assignments.size()));
}

void pairs_bench(benchmark::State& state, Exec exec) {
  const auto& f = fixture();
  auto tasks = f.pairs();
  for (auto _ : state) benchmark::DoNotOptimize(kernels::evaluate_pairs(tasks, f.config, exec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tasks.size()));
}

void BM_EStepSerial(benchmark::State& s) { estep_bench(s, Exec::Serial); }
void BM_EStepOmp(benchmark::State& s) { estep_bench(s, Exec::Parallel); }
void BM_PairsSerial(benchmark::State& s) { pairs_bench(s, Exec::Serial); }
void BM_PairsOmp(benchmark::State& s) { pairs_bench(s, Exec::Parallel); }

BENCHMARK(BM_EStepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EStepOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairsOmp)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
