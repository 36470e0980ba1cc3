#include "doctest.h"

#include <random>

#include "fixtures.hpp"
#include "mbhc/kernels.hpp"
#include "mbhc/likelihood.hpp"
#include "mbhc/mhac.hpp"
#include "mbhc/stats.hpp"
#include "oracles.hpp"

using namespace mbhc;

namespace {

HierarchyNode leaf(NodeId id, std::vector<Count> c, FeatureSet eligible) {
  HierarchyNode n;
  n.id = id;
  std::vector<TermCount> tc;
  for (FeatureId j = 0; j < c.size(); ++j) tc.push_back({j, c[j]});
  n.stats = ClusterStats(std::move(tc), 1);
  n.eligible = std::move(eligible);
  return n;
}

FlatClustering flat_of(std::vector<std::vector<Count>> clusters) {
  FlatClustering f;
  f.K = clusters.size();
  const std::size_t M = clusters.front().size();
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    std::vector<TermCount> tc;
    for (FeatureId j = 0; j < M; ++j) tc.push_back({j, clusters[k][j]});
    f.stats.emplace_back(std::move(tc), 1);
    f.assignments.push_back(static_cast<ClusterId>(k));
  }
  f.partition = FeaturePartition::all_useful(M);
  return f;
}

}  // namespace

TEST_CASE("eligible_noise examples") {
  auto U = FeatureSet::range(6);
  auto a = leaf(0, {1, 1, 1, 1, 1, 1}, U), b = leaf(1, {1, 1, 1, 1, 1, 1}, U);
  CHECK(eligible_noise(a, b) == U);
  auto n12 = leaf(4, {2, 2, 2, 2, 2, 2}, FeatureSet{1, 2, 3});
  CHECK(eligible_noise(n12, a) == FeatureSet{1, 2, 3});
  auto other = leaf(5, {1, 1, 1, 1, 1, 1}, FeatureSet{4, 5});
  CHECK(eligible_noise(n12, other).empty());
}

TEST_CASE("greedy noise selection examples") {
  ModelConfig cfg;
  ClusterStats a({{0, 5}, {1, 5}, {2, 10}}, 1), b({{0, 5}, {1, 5}, {3, 10}}, 1);
  CHECK(greedy_noise_selection(a, b, {}, cfg).noiseSet.empty());
  CHECK(greedy_noise_selection(a, b, {}, cfg).delta == 0.0);

  auto sel = greedy_noise_selection(a, b, FeatureSet::range(4), cfg);
  CHECK(sel.noiseSet == FeatureSet{0, 1});
  CHECK(sel.delta == doctest::Approx(oracle::exhaustive_best_delta(a, b, FeatureSet::range(4), cfg.alpha, merge_delta)));

  ClusterStats same({{0, 3}, {1, 7}, {2, 2}, {3, 5}, {4, 1}}, 4);
  auto full = greedy_noise_selection(same, same, FeatureSet::range(5), cfg);
  CHECK(full.noiseSet == FeatureSet::range(5));
  CHECK(full.delta > 0.0);
  CHECK(full.delta == doctest::Approx(oracle::exhaustive_best_delta(same, same, FeatureSet::range(5), cfg.alpha, merge_delta)));
}

TEST_CASE("greedy noise selection invariants") {
  std::mt19937_64 rng(19);
  for (auto rule : {PrefixRule::StopAtFirstDecrease, PrefixRule::BestPrefix}) {
    ModelConfig cfg;
    cfg.prefixRule = rule;
    for (int trial = 0; trial < 100; ++trial) {
      auto m = oracle::random_matrix(rng, 2, 8, 6, 0.7);
      auto a = ClusterStats::from_row(m.row(0)), b = ClusterStats::from_row(m.row(1));
      auto eligible = fixtures::random_subset(FeatureSet::range(8), rng, 0.8);
      auto sel = greedy_noise_selection(a, b, eligible, cfg);
      CHECK(sel.noiseSet.is_subset_of(eligible));
      CHECK(sel.delta >= 0.0);
      if (sel.noiseSet.empty())
        CHECK(sel.delta == 0.0);
      else
        CHECK(sel.delta == merge_delta(a, b, sel.noiseSet, cfg.alpha));
      if (rule == PrefixRule::BestPrefix) CHECK(sel.delta >= merge_delta(a, b, eligible, cfg.alpha));
    }
  }
}

TEST_CASE("best_merge examples") {
  ModelConfig cfg;
  auto U = FeatureSet::range(4);
  std::vector<HierarchyNode> twins{leaf(0, {3, 2, 4, 1}, U), leaf(1, {3, 2, 4, 1}, U)};
  auto p = best_merge(twins, cfg);
  REQUIRE(p);
  CHECK(p->left == 0);
  CHECK(p->right == 1);
  CHECK(p->delta > 0.0);

  std::vector<HierarchyNode> apart{leaf(0, {4, 0, 0, 0}, U), leaf(1, {0, 4, 0, 0}, U), leaf(2, {0, 0, 4, 4}, U)};
  CHECK_FALSE(best_merge(apart, cfg));

  std::vector<HierarchyNode> three{leaf(0, {5, 4, 0, 0}, U), leaf(1, {4, 5, 0, 0}, U), leaf(2, {0, 0, 6, 6}, U)};
  auto q = best_merge(three, cfg);
  REQUIRE(q);
  CHECK(q->left == 0);
  CHECK(q->right == 1);
  CHECK(propose_merge(three[0], three[2], cfg).delta < q->delta);
  CHECK(propose_merge(three[1], three[2], cfg).delta < q->delta);
}

TEST_CASE("best_merge breaks ties by pair ids") {
  ModelConfig cfg;
  auto U = FeatureSet::range(3);
  std::vector<HierarchyNode> same{leaf(2, {2, 3, 4}, U), leaf(0, {2, 3, 4}, U), leaf(1, {2, 3, 4}, U)};
  auto p = best_merge(same, cfg);
  REQUIRE(p);
  CHECK(p->left == 0);
  CHECK(p->right == 1);
}

TEST_CASE("no-FS proposals use the whole eligible set") {
  ModelConfig cfg;
  cfg.mode = MergeMode::NoFeatureSelection;
  auto U = FeatureSet::range(3);
  auto a = leaf(0, {4, 0, 1}, U), b = leaf(1, {0, 4, 1}, U);
  auto p = propose_merge(a, b, cfg);
  CHECK(p.noiseSet == U);
  CHECK(p.delta == merge_delta(a.stats, b.stats, U, cfg.alpha));
  CHECK(p.delta < 0.0);
}

TEST_CASE("run_mhac examples") {
  ModelConfig cfg;
  auto single = run_mhac(flat_of({{1, 2, 3}}), cfg);
  CHECK(single.nodes.size() == 1);
  CHECK(single.mergeTrace.empty());
  CHECK_FALSE(single.syntheticRoot);

  auto disjoint = run_mhac(flat_of({{6, 0, 0, 0, 0, 0}, {0, 6, 0, 0, 0, 0}, {0, 0, 3, 3, 0, 0}, {0, 0, 0, 0, 3, 3}}), cfg);
  CHECK(disjoint.mergeTrace.empty());
  CHECK(disjoint.syntheticRoot);
  CHECK(disjoint.node(disjoint.root).children.size() == 4);

  cfg.mode = MergeMode::NoFeatureSelection;
  auto forced = run_mhac(flat_of({{6, 0, 0, 0, 0, 0}, {0, 6, 0, 0, 0, 0}, {0, 0, 3, 3, 0, 0}, {0, 0, 0, 0, 3, 3}}), cfg);
  CHECK(forced.mergeTrace.size() == 3);
  CHECK_FALSE(forced.syntheticRoot);
  bool negative = false;
  for (const auto& m : forced.mergeTrace) negative = negative || m.delta < 0.0;
  CHECK(negative);
}

TEST_CASE("agglomerator rejects bad merges") {
  ModelConfig cfg;
  Agglomerator agg(flat_of({{3, 3, 0}, {3, 3, 1}, {0, 1, 5}}), cfg);
  CHECK_THROWS_AS(agg.apply({0, 0, {}, 0.0}), InputError);
  auto id = agg.apply({0, 1, FeatureSet{0, 1}, 0.0});
  CHECK(agg.node(id).eligible == FeatureSet{0, 1});
  CHECK_THROWS_AS(agg.apply({0, 2, {}, 0.0}), InputError);
  CHECK_THROWS_AS(agg.apply({2, id, FeatureSet{2}, 0.0}), InvariantError);
  CHECK(agg.propose(2, id) == propose_merge(agg.node(2), agg.node(id), cfg));
}

TEST_CASE("hierarchy invariants on synthetic data") {
  ModelConfig cfg;
  cfg.kMin = 2;
  cfg.kMax = 6;
  cfg.restarts = 2;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto c = fixtures::small_corpus(seed % 2 ? "((*,*):8,(*,*):6)" : "(((*,*):5,*):6,(*,*):4)", seed, 40);
    auto flat = select_k(c.data, FeaturePartition::all_useful(30), cfg);
    auto d = run_mhac(flat, cfg);
    const double flatML = log_flat(flat.stats, flat.partition, cfg);
    const double finalML = log_hierarchy(d, flat.partition, cfg);
    for (const auto& m : d.mergeTrace) CHECK(m.delta > 0.0);
    CHECK(finalML >= flatML);
    CHECK(std::abs(finalML - flatML - trace_gain(d)) <= 1e-9 * std::max(1.0, std::abs(finalML - flatML)));
    CHECK(oracle::rel_err(finalML, static_cast<double>(oracle::hierarchy_log_ml(c.data, d, flat.partition, cfg))) <=
          1e-12);
    CHECK(oracle::structure_violations(d, flat.partition.useful) == 0);
    for (const auto& m : d.mergeTrace) {
      CHECK(d.node(m.merged).eligible.is_subset_of(d.node(m.left).eligible));
      CHECK(d.node(m.merged).eligible.is_subset_of(d.node(m.right).eligible));
    }
  }
}

TEST_CASE("serial and parallel runs agree") {
  auto c = fixtures::small_corpus("((*,*):8,(*,*,*):6)", 4, 30);
  ModelConfig par;
  par.kMin = 3;
  par.kMax = 6;
  auto ser = par;
  ser.exec = Exec::Serial;
  auto flat = select_k(c.data, FeaturePartition::all_useful(30), par);
  CHECK(flat == select_k(c.data, FeaturePartition::all_useful(30), ser));
  CHECK(run_mhac(flat, par) == run_mhac(flat, ser));
}

TEST_CASE("forced merge sequences replay") {
  ModelConfig cfg;
  auto flat = flat_of({{3, 3, 1, 0}, {3, 2, 1, 0}, {0, 1, 4, 4}, {0, 0, 5, 4}});
  std::vector<std::pair<NodeId, NodeId>> seq{{2, 3}, {0, 1}, {4, 5}};
  auto d = run_mhac_forced(flat, cfg, seq);
  CHECK(d.mergeTrace.size() == 3);
  CHECK(d.root == 6);
  CHECK(d.mergeTrace[0].merged == 4);
  CHECK_THROWS_AS(run_mhac_forced(flat, cfg, std::vector<std::pair<NodeId, NodeId>>{{0, 9}}), InputError);
}

TEST_CASE("kernels: serial and OpenMP versions match") {
  std::mt19937_64 rng(23);
  ModelConfig cfg;
  auto m = oracle::random_matrix(rng, 300, 40, 3, 0.2);
  auto flat = fixtures::random_flat(m, 5, FeaturePartition::with_noise(FeatureSet{3, 7}, 40), rng);
  kernels::EStepModel dense(flat.stats, flat.partition.useful, cfg, 40);
  auto sparseCfg = cfg;
  sparseCfg.denseThreshold = 10;
  kernels::EStepModel sparse(flat.stats, flat.partition.useful, sparseCfg, 40);
  CHECK(dense.dense());
  CHECK_FALSE(sparse.dense());
  for (ClusterId k = 0; k < 5; ++k)
    for (FeatureId j = 0; j < 40; ++j) CHECK(dense.log_theta(k, j) == sparse.log_theta(k, j));

  auto a1 = flat.assignments, a2 = flat.assignments, a3 = flat.assignments;
  auto c1 = kernels::estep_serial(m, dense, a1);
  auto c2 = kernels::estep_omp(m, dense, a2);
  auto c3 = kernels::estep_serial(m, sparse, a3);
  CHECK(c1 == c2);
  CHECK(a1 == a2);
  CHECK(a1 == a3);
  CHECK(c1 == c3);

  Agglomerator agg(flat, cfg);
  std::vector<kernels::PairTask> tasks;
  for (NodeId a = 0; a < 5; ++a)
    for (NodeId b = a + 1; b < 5; ++b) tasks.push_back({&agg.node(a), &agg.node(b)});
  for (auto rule : {PrefixRule::StopAtFirstDecrease, PrefixRule::BestPrefix}) {
    cfg.prefixRule = rule;
    CHECK(kernels::evaluate_pairs_serial(tasks, cfg) == kernels::evaluate_pairs_omp(tasks, cfg));
  }
}

TEST_CASE("E-step scores follow the smoothed parameters") {
  ModelConfig cfg;
  std::vector<ClusterStats> stats{ClusterStats({{0, 3}, {1, 1}}, 2), ClusterStats({{1, 4}}, 1)};
  kernels::EStepModel model(stats, FeatureSet{0, 1}, cfg, 3);
  CHECK(model.log_theta(0, 0) == doctest::Approx(std::log(4.0 / 6.0)));
  CHECK(model.log_theta(1, 0) == doctest::Approx(std::log(1.0 / 6.0)));
  CHECK(model.log_weight(0) == doctest::Approx(std::log(3.0 / 5.0)));
  std::vector<TermCount> row{{0, 2}, {2, 9}};
  CHECK(model.score(row, 0) == doctest::Approx(std::log(3.0 / 5.0) + 2 * std::log(4.0 / 6.0)));
  CHECK(model.best(row) == 0);
}
