#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mbhc {

using FeatureId = std::uint32_t;
using DocId = std::uint32_t;
using NodeId = std::uint32_t;
using ClusterId = std::uint32_t;
using Count = std::int64_t;

/// Log marginal likelihood in nats.
using LogML = double;

/// Bad user input: malformed files, out-of-range arguments, invalid hyperparameters.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structural invariant was found broken at runtime.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct TermCount {
  FeatureId feature = 0;
  Count count = 0;

  friend bool operator==(const TermCount&, const TermCount&) = default;
};

/// Sorted, duplicate-free set of feature ids.
class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(std::initializer_list<FeatureId> ids);
  explicit FeatureSet(std::vector<FeatureId> ids);

  /// {0, 1, ..., n-1}
  static FeatureSet range(std::size_t n);

  bool contains(FeatureId id) const;
  bool empty() const { return ids_.empty(); }
  std::size_t size() const { return ids_.size(); }
  bool is_subset_of(const FeatureSet& other) const;

  const std::vector<FeatureId>& ids() const { return ids_; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  friend FeatureSet operator&(const FeatureSet& a, const FeatureSet& b);
  friend FeatureSet operator|(const FeatureSet& a, const FeatureSet& b);
  friend FeatureSet operator-(const FeatureSet& a, const FeatureSet& b);
  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::vector<FeatureId> ids_;
};

/// Term strings indexed by dense feature id, in insertion order.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::vector<std::string> terms);

  /// Returns the id of `term`, inserting it if absent.
  FeatureId add(std::string_view term);
  std::optional<FeatureId> find(std::string_view term) const;
  const std::string& term(FeatureId id) const;

  std::size_t size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }

  friend bool operator==(const Lexicon& a, const Lexicon& b) { return a.terms_ == b.terms_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, FeatureId> index_;
};

/// Document-by-term counts in compressed row storage. Zero counts are never stored.
class SparseDocMatrix {
 public:
  SparseDocMatrix() = default;
  explicit SparseDocMatrix(std::size_t featureCount) : featureCount_(featureCount) {}

  /// Appends a document. Entries may arrive unsorted; duplicate feature ids,
  /// counts < 1 and ids >= featureCount are rejected.
  DocId add_row(std::vector<TermCount> row);

  std::size_t doc_count() const { return totals_.size(); }
  std::size_t feature_count() const { return featureCount_; }
  std::span<const TermCount> row(DocId doc) const;
  Count doc_total(DocId doc) const { return totals_.at(doc); }
  std::size_t nonzeros() const { return entries_.size(); }

  friend bool operator==(const SparseDocMatrix&, const SparseDocMatrix&) = default;

 private:
  std::size_t featureCount_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<TermCount> entries_;
  std::vector<Count> totals_;
};

/// Additive sufficient statistics of a cluster: per-term token counts,
/// their total, and the number of member documents.
class ClusterStats {
 public:
  ClusterStats() = default;
  /// Zero entries are dropped; negative counts and duplicate ids are rejected.
  ClusterStats(std::vector<TermCount> counts, Count docCount);

  static ClusterStats from_row(std::span<const TermCount> row);

  std::span<const TermCount> term_counts() const { return counts_; }
  Count count(FeatureId feature) const;
  Count total_tokens() const { return total_; }
  Count doc_count() const { return docs_; }

  friend bool operator==(const ClusterStats&, const ClusterStats&) = default;

 private:
  std::vector<TermCount> counts_;
  Count total_ = 0;
  Count docs_ = 0;
};

/// Global split of the lexicon into features shared by all clusters (noise)
/// and cluster-specific features (useful).
struct FeaturePartition {
  FeatureSet noise;
  FeatureSet useful;

  static FeaturePartition all_useful(std::size_t featureCount);
  static FeaturePartition with_noise(FeatureSet noise, std::size_t featureCount);
  /// Throws InputError unless noise and useful are disjoint and cover 0..M-1.
  void validate(std::size_t featureCount) const;

  friend bool operator==(const FeaturePartition&, const FeaturePartition&) = default;
};

struct HierarchyNode {
  NodeId id = 0;
  std::vector<NodeId> children;
  std::optional<NodeId> parent;
  /// Noise set chosen when this node was created by a merge (empty for leaves
  /// and for a synthetic root).
  FeatureSet localNoise;
  /// Features still allowed to become noise in merges above this node.
  FeatureSet eligible;
  ClusterStats stats;
  std::vector<DocId> memberDocs;

  bool is_leaf() const { return children.empty(); }

  friend bool operator==(const HierarchyNode&, const HierarchyNode&) = default;
};

struct MergeRecord {
  NodeId left = 0;
  NodeId right = 0;
  NodeId merged = 0;
  FeatureSet noise;
  double delta = 0.0;

  friend bool operator==(const MergeRecord&, const MergeRecord&) = default;
};

/// Binary merge tree over flat clusters. When merging stops with several
/// active nodes they hang under a synthetic root that carries no noise.
struct Dendrogram {
  std::map<NodeId, HierarchyNode> nodes;
  NodeId root = 0;
  std::vector<MergeRecord> mergeTrace;
  bool syntheticRoot = false;

  const HierarchyNode& node(NodeId id) const;
  std::vector<NodeId> leaves() const;
  std::size_t leaf_count() const;
  /// Union of localNoise over the path root -> id.
  FeatureSet cumulative_noise(NodeId id) const;
  /// Noise chosen by the parent merge (empty at the top or under a synthetic root).
  FeatureSet parent_noise(NodeId id) const;

  /// Rebuilds a dendrogram from its leaves and merge trace.
  static Dendrogram replay(std::vector<HierarchyNode> leaves, const std::vector<MergeRecord>& trace,
                           bool syntheticRoot);

  friend bool operator==(const Dendrogram&, const Dendrogram&) = default;
};

/// Scalar hyperparameter with optional per-feature overrides.
struct Hyperparameter {
  double value = 1.0;
  std::vector<double> perFeature;

  double at(FeatureId j) const { return perFeature.empty() ? value : perFeature.at(j); }
  double sum_over(const FeatureSet& feats) const;
  void validate(std::string_view name, std::size_t featureCount) const;

  friend bool operator==(const Hyperparameter&, const Hyperparameter&) = default;
};

enum class PrefixRule { StopAtFirstDecrease, BestPrefix };
enum class MergeMode { FeatureSelection, NoFeatureSelection };
enum class Exec { Serial, Parallel };

struct ModelConfig {
  Hyperparameter alpha;
  Hyperparameter beta;
  double gammaU = 1.0;
  double gammaN = 1.0;
  /// Per-cluster membership hyperparameter; the total is sigma * K.
  double sigma = 1.0;
  std::size_t kMin = 1;
  std::size_t kMax = 10;
  std::size_t restarts = 3;
  std::uint64_t seed = 1;
  std::size_t emMaxIters = 100;
  /// EM stops once at most emTol * docCount assignments change in an iteration.
  double emTol = 0.0;
  PrefixRule prefixRule = PrefixRule::StopAtFirstDecrease;
  MergeMode mode = MergeMode::FeatureSelection;
  bool rootNoise = false;
  /// Lexicons up to this size get dense E-step parameter tables.
  std::size_t denseThreshold = 1024;
  Exec exec = Exec::Parallel;

  void validate(std::size_t featureCount) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::string_view to_string(PrefixRule rule);
std::string_view to_string(MergeMode mode);
PrefixRule parse_prefix_rule(std::string_view text);
MergeMode parse_merge_mode(std::string_view text);

}  // namespace mbhc
