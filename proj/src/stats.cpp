#include "mbhc/stats.hpp"

#include <algorithm>
#include <string>

namespace mbhc {

namespace {

// Collapses equal feature ids of a sorted list by summing their counts.
std::vector<TermCount> combine_sorted(std::vector<TermCount> v) {
  std::sort(v.begin(), v.end(), [](const TermCount& a, const TermCount& b) { return a.feature < b.feature; });
  std::vector<TermCount> out;
  out.reserve(v.size());
  for (const auto& tc : v) {
    if (!out.empty() && out.back().feature == tc.feature)
      out.back().count += tc.count;
    else
      out.push_back(tc);
  }
  return out;
}

}  // namespace

std::vector<ClusterStats> stats_from_assignment(const SparseDocMatrix& data, std::span<const ClusterId> assignments,
                                                std::size_t K) {
  if (assignments.size() != data.doc_count()) throw InputError("assignment length does not match document count");
  std::vector<std::vector<TermCount>> pooled(K);
  std::vector<Count> docs(K, 0);
  for (DocId d = 0; d < data.doc_count(); ++d) {
    auto k = assignments[d];
    if (k >= K) throw InputError("assignment " + std::to_string(k) + " out of range for K=" + std::to_string(K));
    auto row = data.row(d);
    pooled[k].insert(pooled[k].end(), row.begin(), row.end());
    ++docs[k];
  }
  std::vector<ClusterStats> out;
  out.reserve(K);
  for (std::size_t k = 0; k < K; ++k) out.emplace_back(combine_sorted(std::move(pooled[k])), docs[k]);
  return out;
}

ClusterStats add_stats(const ClusterStats& a, const ClusterStats& b) {
  auto ta = a.term_counts();
  auto tb = b.term_counts();
  std::vector<TermCount> out;
  out.reserve(ta.size() + tb.size());
  std::size_t i = 0, j = 0;
  while (i < ta.size() || j < tb.size()) {
    if (j == tb.size() || (i < ta.size() && ta[i].feature < tb[j].feature)) {
      out.push_back(ta[i++]);
    } else if (i == ta.size() || tb[j].feature < ta[i].feature) {
      out.push_back(tb[j++]);
    } else {
      out.push_back({ta[i].feature, ta[i].count + tb[j].count});
      ++i;
      ++j;
    }
  }
  return ClusterStats(std::move(out), a.doc_count() + b.doc_count());
}

ClusterStats project(const ClusterStats& s, const FeatureSet& feats) {
  std::vector<TermCount> out;
  for (const auto& tc : s.term_counts())
    if (feats.contains(tc.feature)) out.push_back(tc);
  return ClusterStats(std::move(out), s.doc_count());
}

Count projected_total(const ClusterStats& s, const FeatureSet& feats) {
  Count total = 0;
  for (const auto& tc : s.term_counts())
    if (feats.contains(tc.feature)) total += tc.count;
  return total;
}

}  // namespace mbhc
