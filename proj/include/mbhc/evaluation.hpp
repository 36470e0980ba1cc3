#pragma once

#include <string>
#include <vector>

#include "mbhc/types.hpp"

namespace mbhc {

struct Labeling {
  std::vector<ClusterId> labels;
  std::size_t k = 0;

  /// Builds a labeling, renumbering arbitrary ids to 0..k-1 by first appearance.
  static Labeling from_ids(std::span<const ClusterId> ids);
  void validate() const;

  friend bool operator==(const Labeling&, const Labeling&) = default;
};

/// Normalized mutual information 2 I(a;b) / (H(a) + H(b)) in nats.
/// Two constant labelings score 1; exactly one constant labeling scores 0.
double nmi(const Labeling& a, const Labeling& b);

/// Splits the dendrogram into k groups by undoing merges from the last one
/// backwards and labels every document by its leaf's group. A synthetic
/// root counts as one step from 1 group to its child count, so k strictly
/// between those two is unreachable and rejected.
Labeling cut(const Dendrogram& d, std::size_t k);

/// Group labels of the leaves themselves (one category per flat cluster).
Labeling leaf_labeling(const Dendrogram& d);

/// The node's localNoise terms ordered by pooled count (descending, then
/// feature id), truncated to topN.
std::vector<std::string> node_labels(const Dendrogram& d, NodeId node, const Lexicon& lex, std::size_t topN);

}  // namespace mbhc
