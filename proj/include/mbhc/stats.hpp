#pragma once

#include <span>
#include <vector>

#include "mbhc/types.hpp"

namespace mbhc {

/// Per-cluster sufficient statistics for a hard assignment of documents to
/// clusters 0..K-1. Throws InputError for an out-of-range assignment.
std::vector<ClusterStats> stats_from_assignment(const SparseDocMatrix& data, std::span<const ClusterId> assignments,
                                                std::size_t K);

ClusterStats add_stats(const ClusterStats& a, const ClusterStats& b);

/// Restricts term counts to `feats`; the document count is kept.
ClusterStats project(const ClusterStats& s, const FeatureSet& feats);

/// Token total of `s` over `feats` without materializing the projection.
Count projected_total(const ClusterStats& s, const FeatureSet& feats);

}  // namespace mbhc
