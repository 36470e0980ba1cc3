#include "mbhc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>

namespace mbhc {

Labeling Labeling::from_ids(std::span<const ClusterId> ids) {
  std::map<ClusterId, ClusterId> remap;
  Labeling out;
  out.labels.reserve(ids.size());
  for (auto id : ids) {
    auto [it, inserted] = remap.try_emplace(id, static_cast<ClusterId>(remap.size()));
    out.labels.push_back(it->second);
  }
  out.k = remap.size();
  return out;
}

void Labeling::validate() const {
  for (auto l : labels)
    if (l >= k) throw InputError("label " + std::to_string(l) + " outside 0.." + std::to_string(k) + "-1");
}

double nmi(const Labeling& a, const Labeling& b) {
  if (a.labels.size() != b.labels.size()) throw InputError("labelings cover different item sets");
  if (a.labels.empty()) throw InputError("labelings are empty");
  a.validate();
  b.validate();

  const auto n = static_cast<double>(a.labels.size());
  std::map<std::pair<ClusterId, ClusterId>, double> joint;
  std::vector<double> ca(a.k, 0.0), cb(b.k, 0.0);
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    joint[{a.labels[i], b.labels[i]}] += 1.0;
    ca[a.labels[i]] += 1.0;
    cb[b.labels[i]] += 1.0;
  }
  auto entropy = [n](const std::vector<double>& counts) {
    double h = 0.0;
    for (double c : counts)
      if (c > 0) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(ca), hb = entropy(cb);
  // Marginals with a single category give exactly zero above.
  if (ha == 0.0 && hb == 0.0) return 1.0;
  if (ha == 0.0 || hb == 0.0) return 0.0;

  double mi = 0.0;
  for (const auto& [cell, c] : joint) mi += (c / n) * std::log(n * c / (ca[cell.first] * cb[cell.second]));
  return std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
}

namespace {

void collect_leaves(const Dendrogram& d, NodeId id, std::vector<NodeId>& out) {
  const auto& n = d.node(id);
  if (n.is_leaf()) {
    out.push_back(id);
    return;
  }
  for (auto c : n.children) collect_leaves(d, c, out);
}

}  // namespace

Labeling cut(const Dendrogram& d, std::size_t k) {
  const std::size_t leaves = d.leaf_count();
  if (k < 1 || k > leaves)
    throw InputError("cut size " + std::to_string(k) + " outside 1.." + std::to_string(leaves));

  std::set<NodeId> groups{d.root};
  if (k > 1 && d.syntheticRoot) {
    const auto& kids = d.node(d.root).children;
    if (k < kids.size())
      throw InputError("cut size " + std::to_string(k) + " is unreachable: the top level has " +
                       std::to_string(kids.size()) + " groups");
    groups = std::set<NodeId>(kids.begin(), kids.end());
  }
  for (auto it = d.mergeTrace.rbegin(); it != d.mergeTrace.rend() && groups.size() < k; ++it) {
    if (!groups.erase(it->merged)) throw InvariantError("merge trace out of order with the tree");
    groups.insert(it->left);
    groups.insert(it->right);
  }
  if (groups.size() != k) throw InvariantError("could not reach the requested number of groups");

  std::vector<std::optional<ClusterId>> docGroup;
  for (auto g : groups) {
    std::vector<NodeId> members;
    collect_leaves(d, g, members);
    for (auto leaf : members)
      for (auto doc : d.node(leaf).memberDocs) {
        if (doc >= docGroup.size()) docGroup.resize(doc + 1);
        if (docGroup[doc]) throw InvariantError("document listed under two leaves");
        docGroup[doc] = g;
      }
  }
  std::vector<ClusterId> raw;
  raw.reserve(docGroup.size());
  for (std::size_t doc = 0; doc < docGroup.size(); ++doc) {
    if (!docGroup[doc]) throw InvariantError("document " + std::to_string(doc) + " is not under any leaf");
    raw.push_back(*docGroup[doc]);
  }
  auto out = Labeling::from_ids(raw);
  // Groups without documents still count as categories.
  out.k = std::max(out.k, k);
  return out;
}

Labeling leaf_labeling(const Dendrogram& d) { return cut(d, d.leaf_count()); }

std::vector<std::string> node_labels(const Dendrogram& d, NodeId node, const Lexicon& lex, std::size_t topN) {
  const auto& n = d.node(node);
  std::vector<std::pair<Count, FeatureId>> ranked;
  for (auto j : n.localNoise) ranked.emplace_back(n.stats.count(j), j);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < topN; ++i) out.push_back(lex.term(ranked[i].second));
  return out;
}

}  // namespace mbhc
