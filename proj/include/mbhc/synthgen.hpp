#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mbhc/types.hpp"

namespace mbhc {

/// Tree shape for synthetic hierarchies. Written as nested parentheses with
/// `*` for a leaf and an optional `:n` giving the number of shared (noise)
/// features allocated to an internal node, e.g. "((*,*):15,(*,*):21)".
struct ShapeNode {
  std::vector<ShapeNode> children;
  std::size_t noise = 0;

  bool is_leaf() const { return children.empty(); }
  friend bool operator==(const ShapeNode&, const ShapeNode&) = default;
};

ShapeNode parse_shape(std::string_view text);
std::string format_shape(const ShapeNode& shape);

struct StructureSpec {
  ShapeNode shape;
  std::size_t featureCount = 50;
  double minUsefulMass = 0.5;
  std::size_t docsPerLeaf = 500;
  std::size_t tokensPerDoc = 100;
  std::uint64_t seed = 1;

  /// Two internal nodes with two leaves each.
  static StructureSpec structure1();
  /// Five leaves under three internal nodes, one of them nested.
  static StructureSpec structure2();
};

struct TruthNode {
  std::size_t id = 0;
  std::optional<std::size_t> parent;
  std::vector<std::size_t> children;
  std::size_t depth = 0;
  /// Features shared by every leaf under this node (empty for leaves).
  FeatureSet noise;
  /// Total probability the node's shared block carries in each of its leaves.
  double blockMass = 0.0;
  /// Leaves: the full multinomial over all features. Internal nodes with a
  /// noise block: the conditional distribution within that block (zero elsewhere).
  std::vector<double> params;

  bool is_leaf() const { return children.empty(); }
};

/// Generating parameters and per-document labels. Leaves are numbered
/// 0..L-1 left to right, internal nodes follow in post-order, the root last.
struct GroundTruth {
  std::vector<TruthNode> nodes;
  std::vector<std::size_t> leafNodes;
  std::size_t root = 0;
  /// Per-document leaf index in 0..L-1.
  std::vector<ClusterId> leafLabels;
  /// levelLabels[d-1][doc] is the category of the doc's ancestor at depth d
  /// (its leaf when the leaf is shallower), for d = 1 .. max leaf depth - 1.
  std::vector<std::vector<ClusterId>> levelLabels;

  std::size_t leaf_count() const { return leafNodes.size(); }
  std::size_t max_depth() const;
  /// Ñ sets of the internal nodes, indexed like `nodes` (empty for leaves).
  std::vector<FeatureSet> true_noise_sets() const;
};

/// Draws noise blocks and multinomial parameters. Throws InputError when the
/// allocation leaves a leaf without useful features or the mass is invalid.
GroundTruth gen_params(const StructureSpec& spec);

struct SyntheticCorpus {
  SparseDocMatrix data;
  GroundTruth truth;
};

/// Samples docsPerLeaf documents of tokensPerDoc tokens per leaf. Each leaf
/// uses its own derived seed, so the result does not depend on scheduling.
SyntheticCorpus sample(const GroundTruth& skeleton, const StructureSpec& spec, Exec exec = Exec::Parallel);

}  // namespace mbhc
