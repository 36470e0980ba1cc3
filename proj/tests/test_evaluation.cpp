#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <map>
#include <set>

#include "fixtures.hpp"
#include "mbhc/evaluation.hpp"
#include "oracles.hpp"

using namespace mbhc;

namespace {

Labeling lab(std::vector<ClusterId> l) { return Labeling::from_ids(l); }

// Four leaves merged as ((0,1),(2,3)).
Dendrogram four_leaves(bool topMerge) {
  std::vector<HierarchyNode> leaves(4);
  for (NodeId k = 0; k < 4; ++k) {
    leaves[k].id = k;
    leaves[k].memberDocs = {2 * k, 2 * k + 1};
    leaves[k].stats = ClusterStats({{k, 2}}, 2);
  }
  std::vector<MergeRecord> trace{{0, 1, 4, FeatureSet{}, 1.0}, {2, 3, 5, FeatureSet{}, 1.0}};
  if (topMerge) trace.push_back({4, 5, 6, FeatureSet{}, 0.5});
  return Dendrogram::replay(leaves, trace, !topMerge);
}

}  // namespace

TEST_CASE("nmi examples") {
  CHECK(nmi(lab({0, 0, 1, 1, 2}), lab({1, 1, 0, 0, 2})) == doctest::Approx(1.0));
  CHECK(nmi(lab({0, 1, 0, 1}), lab({0, 0, 0, 0})) == 0.0);
  CHECK(nmi(lab({0, 0, 0}), lab({1, 1, 1})) == 1.0);
  CHECK_THROWS_AS(nmi(lab({0, 1}), lab({0, 1, 1})), InputError);
  CHECK_THROWS_AS(nmi(Labeling{{0, 3}, 2}, lab({0, 1})), InputError);
}

TEST_CASE("nmi of a hand-computed contingency table") {
  // Rows of a against columns of b: [[2,0],[0,1],[1,1]].
  auto a = lab({0, 0, 1, 2, 2});
  auto b = lab({0, 0, 1, 0, 1});
  const double ha = -(0.4 * std::log(0.4) + 0.2 * std::log(0.2) + 0.4 * std::log(0.4));
  const double hb = -(0.6 * std::log(0.6) + 0.4 * std::log(0.4));
  const double mi = 0.4 * std::log(0.4 / (0.4 * 0.6)) + 0.2 * std::log(0.2 / (0.2 * 0.4)) +
                    0.2 * std::log(0.2 / (0.4 * 0.6)) + 0.2 * std::log(0.2 / (0.4 * 0.4));
  CHECK(nmi(a, b) == doctest::Approx(2 * mi / (ha + hb)).epsilon(1e-14));
}

TEST_CASE("nmi properties on random labelings") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 10 + rng() % 50;
    std::vector<ClusterId> a(n), b(n);
    for (auto& x : a) x = static_cast<ClusterId>(rng() % 5);
    for (auto& x : b) x = static_cast<ClusterId>(rng() % 4);
    double v = nmi(lab(a), lab(b));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(std::abs(v - nmi(lab(b), lab(a))) <= 1e-12);
    std::vector<ClusterId> perm{3, 0, 4, 1, 2};
    auto pa = a;
    for (auto& x : pa) x = perm[x];
    CHECK(std::abs(v - nmi(lab(pa), lab(b))) <= 1e-12);
  }
}

TEST_CASE("cut examples") {
  auto d = four_leaves(true);
  CHECK(cut(d, 4) == leaf_labeling(d));
  CHECK(cut(d, 4).labels == std::vector<ClusterId>{0, 0, 1, 1, 2, 2, 3, 3});
  auto one = cut(d, 1);
  CHECK(one.k == 1);
  CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](ClusterId l) { return l == 0; }));
  auto two = cut(d, 2);
  CHECK(two.k == 2);
  CHECK(two.labels == std::vector<ClusterId>{0, 0, 0, 0, 1, 1, 1, 1});
  auto three = cut(d, 3);
  CHECK(three.k == 3);
  CHECK(three.labels == std::vector<ClusterId>{0, 0, 0, 0, 1, 1, 2, 2});
  CHECK_THROWS_AS(cut(d, 0), InputError);
  CHECK_THROWS_AS(cut(d, 5), InputError);
}

TEST_CASE("cut under a synthetic root") {
  auto d = four_leaves(false);
  CHECK(d.syntheticRoot);
  CHECK(cut(d, 1).k == 1);
  CHECK(cut(d, 2).labels == std::vector<ClusterId>{0, 0, 0, 0, 1, 1, 1, 1});
  CHECK(cut(d, 4).k == 4);

  std::vector<HierarchyNode> leaves(4);
  for (NodeId k = 0; k < 4; ++k) {
    leaves[k].id = k;
    leaves[k].memberDocs = {k};
  }
  auto wide = Dendrogram::replay(leaves, {{0, 1, 4, FeatureSet{}, 1.0}}, true);
  CHECK_THROWS_AS(cut(wide, 2), InputError);
  CHECK(cut(wide, 3).labels == std::vector<ClusterId>{0, 0, 1, 2});
}

TEST_CASE("cuts of random hierarchies are unions of subtrees") {
  std::mt19937_64 rng(3);
  ModelConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    auto m = oracle::random_matrix(rng, 40, 6);
    auto flat = fixtures::random_flat(m, 7, FeaturePartition::all_useful(6), rng);
    auto d = fixtures::random_hierarchy(flat, cfg, rng, 6);
    std::map<DocId, NodeId> leafOf;
    for (auto l : d.leaves())
      for (auto doc : d.node(l).memberDocs) leafOf[doc] = l;
    std::set<std::set<NodeId>> subtrees;
    for (const auto& [id, n] : d.nodes) {
      std::set<NodeId> under;
      std::vector<NodeId> stack{id};
      while (!stack.empty()) {
        auto cur = stack.back();
        stack.pop_back();
        if (d.node(cur).is_leaf()) under.insert(cur);
        for (auto c : d.node(cur).children) stack.push_back(c);
      }
      subtrees.insert(under);
    }
    for (std::size_t k = 1; k <= 7; ++k) {
      auto l = cut(d, k);
      CHECK(l.k == k);
      std::map<ClusterId, std::set<NodeId>> groups;
      for (DocId doc = 0; doc < l.labels.size(); ++doc) groups[l.labels[doc]].insert(leafOf[doc]);
      CHECK(groups.size() == k);
      for (const auto& [g, members] : groups) CHECK(subtrees.count(members) == 1);
    }
  }
}

TEST_CASE("node labels") {
  auto d = four_leaves(true);
  Lexicon lex(std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(node_labels(d, 6, lex, 3).empty());
  std::vector<HierarchyNode> leaves(2);
  leaves[0].id = 0;
  leaves[0].stats = ClusterStats({{0, 1}, {1, 5}, {2, 5}, {3, 9}}, 1);
  leaves[1].id = 1;
  leaves[1].stats = ClusterStats({{0, 1}, {1, 1}, {2, 1}}, 1);
  auto t = Dendrogram::replay(leaves, {{0, 1, 2, FeatureSet{0, 1, 2}, 0.1}}, false);
  CHECK(node_labels(t, 2, lex, 10) == std::vector<std::string>{"b", "c", "a"});
  CHECK(node_labels(t, 2, lex, 1) == std::vector<std::string>{"b"});
  CHECK_THROWS_AS(node_labels(t, 7, lex, 1), InputError);
}
