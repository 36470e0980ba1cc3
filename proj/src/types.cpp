#include "mbhc/types.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>

#include "mbhc/stats.hpp"

namespace mbhc {

FeatureSet::FeatureSet(std::initializer_list<FeatureId> ids) : FeatureSet(std::vector<FeatureId>(ids)) {}

FeatureSet::FeatureSet(std::vector<FeatureId> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
}

FeatureSet FeatureSet::range(std::size_t n) {
  FeatureSet s;
  s.ids_.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.ids_[i] = static_cast<FeatureId>(i);
  return s;
}

bool FeatureSet::contains(FeatureId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

bool FeatureSet::is_subset_of(const FeatureSet& other) const {
  return std::includes(other.ids_.begin(), other.ids_.end(), ids_.begin(), ids_.end());
}

FeatureSet operator&(const FeatureSet& a, const FeatureSet& b) {
  FeatureSet out;
  std::set_intersection(a.ids_.begin(), a.ids_.end(), b.ids_.begin(), b.ids_.end(), std::back_inserter(out.ids_));
  return out;
}

FeatureSet operator|(const FeatureSet& a, const FeatureSet& b) {
  FeatureSet out;
  std::set_union(a.ids_.begin(), a.ids_.end(), b.ids_.begin(), b.ids_.end(), std::back_inserter(out.ids_));
  return out;
}

FeatureSet operator-(const FeatureSet& a, const FeatureSet& b) {
  FeatureSet out;
  std::set_difference(a.ids_.begin(), a.ids_.end(), b.ids_.begin(), b.ids_.end(), std::back_inserter(out.ids_));
  return out;
}

Lexicon::Lexicon(std::vector<std::string> terms) {
  for (auto& t : terms) {
    if (index_.count(t)) throw InputError("duplicate lexicon term '" + t + "'");
    add(t);
  }
}

FeatureId Lexicon::add(std::string_view term) {
  std::string key(term);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  auto id = static_cast<FeatureId>(terms_.size());
  terms_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<FeatureId> Lexicon::find(std::string_view term) const {
  auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Lexicon::term(FeatureId id) const {
  if (id >= terms_.size()) throw InputError("feature id " + std::to_string(id) + " outside lexicon");
  return terms_[id];
}

DocId SparseDocMatrix::add_row(std::vector<TermCount> row) {
  std::sort(row.begin(), row.end(), [](const TermCount& a, const TermCount& b) { return a.feature < b.feature; });
  Count total = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i].feature >= featureCount_)
      throw InputError("feature id " + std::to_string(row[i].feature) + " >= feature count " +
                       std::to_string(featureCount_));
    if (row[i].count < 1) throw InputError("document counts must be positive");
    if (i > 0 && row[i].feature == row[i - 1].feature)
      throw InputError("duplicate feature id " + std::to_string(row[i].feature) + " in document row");
    total += row[i].count;
  }
  entries_.insert(entries_.end(), row.begin(), row.end());
  offsets_.push_back(entries_.size());
  totals_.push_back(total);
  return static_cast<DocId>(totals_.size() - 1);
}

std::span<const TermCount> SparseDocMatrix::row(DocId doc) const {
  if (doc >= totals_.size()) throw InputError("document id out of range");
  return {entries_.data() + offsets_[doc], offsets_[doc + 1] - offsets_[doc]};
}

ClusterStats::ClusterStats(std::vector<TermCount> counts, Count docCount) : docs_(docCount) {
  if (docCount < 0) throw InputError("negative document count");
  std::sort(counts.begin(), counts.end(),
            [](const TermCount& a, const TermCount& b) { return a.feature < b.feature; });
  counts_.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& tc = counts[i];
    if (tc.count < 0) throw InputError("negative term count");
    if (i > 0 && counts[i - 1].feature == tc.feature) throw InputError("duplicate feature id in cluster stats");
    if (tc.count == 0) continue;
    counts_.push_back(tc);
    total_ += tc.count;
  }
}

ClusterStats ClusterStats::from_row(std::span<const TermCount> row) {
  return ClusterStats(std::vector<TermCount>(row.begin(), row.end()), 1);
}

Count ClusterStats::count(FeatureId feature) const {
  auto it = std::lower_bound(counts_.begin(), counts_.end(), feature,
                             [](const TermCount& tc, FeatureId f) { return tc.feature < f; });
  return (it != counts_.end() && it->feature == feature) ? it->count : 0;
}

FeaturePartition FeaturePartition::all_useful(std::size_t featureCount) {
  return {FeatureSet{}, FeatureSet::range(featureCount)};
}

FeaturePartition FeaturePartition::with_noise(FeatureSet noise, std::size_t featureCount) {
  auto useful = FeatureSet::range(featureCount) - noise;
  FeaturePartition p{std::move(noise), std::move(useful)};
  p.validate(featureCount);
  return p;
}

void FeaturePartition::validate(std::size_t featureCount) const {
  if (!(noise & useful).empty()) throw InputError("noise and useful feature sets overlap");
  if (noise.size() + useful.size() != featureCount || (noise | useful) != FeatureSet::range(featureCount))
    throw InputError("feature partition does not cover the lexicon");
}

const HierarchyNode& Dendrogram::node(NodeId id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw InputError("unknown node id " + std::to_string(id));
  return it->second;
}

std::vector<NodeId> Dendrogram::leaves() const {
  std::vector<NodeId> out;
  for (const auto& [id, n] : nodes)
    if (n.is_leaf()) out.push_back(id);
  return out;
}

std::size_t Dendrogram::leaf_count() const { return leaves().size(); }

FeatureSet Dendrogram::cumulative_noise(NodeId id) const {
  FeatureSet acc;
  std::optional<NodeId> cur = id;
  std::size_t steps = 0;
  while (cur) {
    const auto& n = node(*cur);
    acc = acc | n.localNoise;
    cur = n.parent;
    if (++steps > nodes.size()) throw InvariantError("cycle in dendrogram parent links");
  }
  return acc;
}

FeatureSet Dendrogram::parent_noise(NodeId id) const {
  const auto& n = node(id);
  if (!n.parent) return {};
  return node(*n.parent).localNoise;
}

Dendrogram Dendrogram::replay(std::vector<HierarchyNode> leaves, const std::vector<MergeRecord>& trace,
                              bool syntheticRoot) {
  if (leaves.empty()) throw InputError("dendrogram needs at least one leaf");
  Dendrogram d;
  std::set<NodeId> active;
  for (auto& leaf : leaves) {
    leaf.children.clear();
    leaf.parent.reset();
    auto id = leaf.id;
    if (!d.nodes.emplace(id, std::move(leaf)).second) throw InputError("duplicate leaf id");
    active.insert(id);
  }
  for (const auto& m : trace) {
    if (!active.count(m.left) || !active.count(m.right) || m.left == m.right)
      throw InputError("merge trace references an inactive node");
    if (d.nodes.count(m.merged)) throw InputError("merge trace reuses node id " + std::to_string(m.merged));
    HierarchyNode n;
    n.id = m.merged;
    n.children = {m.left, m.right};
    n.localNoise = m.noise;
    n.eligible = m.noise;
    n.stats = add_stats(d.nodes.at(m.left).stats, d.nodes.at(m.right).stats);
    d.nodes.at(m.left).parent = m.merged;
    d.nodes.at(m.right).parent = m.merged;
    active.erase(m.left);
    active.erase(m.right);
    active.insert(m.merged);
    d.nodes.emplace(m.merged, std::move(n));
  }
  d.mergeTrace = trace;
  d.syntheticRoot = syntheticRoot;
  if (syntheticRoot) {
    HierarchyNode r;
    r.id = d.nodes.rbegin()->first + 1;
    for (auto id : active) {
      r.children.push_back(id);
      r.stats = add_stats(r.stats, d.nodes.at(id).stats);
      d.nodes.at(id).parent = r.id;
    }
    d.root = r.id;
    d.nodes.emplace(r.id, std::move(r));
  } else {
    if (active.size() != 1) throw InputError("merge trace leaves several roots but no synthetic root");
    d.root = *active.begin();
  }
  return d;
}

double Hyperparameter::sum_over(const FeatureSet& feats) const {
  if (perFeature.empty()) return value * static_cast<double>(feats.size());
  double s = 0.0;
  for (auto j : feats) s += perFeature.at(j);
  return s;
}

void Hyperparameter::validate(std::string_view name, std::size_t featureCount) const {
  auto bad = [](double x) { return !(x > 0.0) || !std::isfinite(x); };
  if (perFeature.empty()) {
    if (bad(value)) throw InputError(std::string(name) + " must be > 0");
    return;
  }
  if (perFeature.size() != featureCount)
    throw InputError(std::string(name) + " vector length does not match the lexicon");
  for (double x : perFeature)
    if (bad(x)) throw InputError(std::string(name) + " entries must be > 0");
}

void ModelConfig::validate(std::size_t featureCount) const {
  alpha.validate("alpha", featureCount);
  beta.validate("beta", featureCount);
  for (auto [name, v] : {std::pair{"gammaU", gammaU}, {"gammaN", gammaN}, {"sigma", sigma}})
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(name) + " must be > 0");
  if (kMin < 1) throw InputError("k-range lower bound must be >= 1");
  if (kMax < kMin) throw InputError("k-range is empty");
  if (restarts < 1) throw InputError("restarts must be >= 1");
  if (emMaxIters < 1) throw InputError("emMaxIters must be >= 1");
  if (emTol < 0.0) throw InputError("emTol must be >= 0");
}

std::string_view to_string(PrefixRule rule) {
  return rule == PrefixRule::BestPrefix ? "best" : "first-decrease";
}

std::string_view to_string(MergeMode mode) { return mode == MergeMode::NoFeatureSelection ? "nofs" : "fs"; }

PrefixRule parse_prefix_rule(std::string_view text) {
  if (text == "first-decrease") return PrefixRule::StopAtFirstDecrease;
  if (text == "best") return PrefixRule::BestPrefix;
  throw InputError("unknown prefix rule '" + std::string(text) + "'");
}

MergeMode parse_merge_mode(std::string_view text) {
  if (text == "fs") return MergeMode::FeatureSelection;
  if (text == "nofs") return MergeMode::NoFeatureSelection;
  throw InputError("unknown merge mode '" + std::string(text) + "'");
}

}  // namespace mbhc
