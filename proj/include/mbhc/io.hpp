#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mbhc/evaluation.hpp"
#include "mbhc/flat_em.hpp"
#include "mbhc/synthgen.hpp"
#include "mbhc/types.hpp"

namespace mbhc {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Corpus ingestion
// ---------------------------------------------------------------------------

/// jsonl: one {"id": ..., "text": ...} object per line.
/// counts: tab-separated `doc-id <TAB> term <TAB> count` lines; blank lines
/// and lines starting with '#' are skipped; terms are taken verbatim.
enum class CorpusFormat { Jsonl, Counts };

struct IngestOptions {
  CorpusFormat format = CorpusFormat::Jsonl;
  /// Terms occurring in fewer documents are dropped.
  std::size_t minDocFreq = 1;
  bool lowercase = true;
};

struct Corpus {
  SparseDocMatrix matrix;
  Lexicon lexicon;
  std::vector<std::string> docIds;
};

/// Splits on anything that is not an ASCII letter or digit; bytes >= 0x80
/// are kept inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text, bool lowercase);

/// Lexicon order is first appearance among the retained terms; documents keep
/// input order. Errors carry the offending line number.
Corpus ingest(std::istream& in, const IngestOptions& options);
Corpus ingest_file(const std::string& path, const IngestOptions& options);

/// ".jsonl"/".json" -> Jsonl, ".tsv"/".counts"/".txt" -> Counts.
CorpusFormat format_for_path(std::string_view path);

void write_counts(std::ostream& out, const Corpus& corpus);

// ---------------------------------------------------------------------------
// Structured artifacts (JSON with a format tag)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kFlatFormat = "mbhc.flat/1";
inline constexpr std::string_view kDendrogramFormat = "mbhc.dendrogram/1";
inline constexpr std::string_view kLabelingFormat = "mbhc.labeling/1";
inline constexpr std::string_view kTruthFormat = "mbhc.truth/1";

Json config_to_json(const ModelConfig& config);
/// Overlays the keys present in `j` onto `base`; unknown keys are rejected.
ModelConfig config_from_json(const Json& j, ModelConfig base = {});

struct FlatClusteringFile {
  Lexicon lexicon;
  std::vector<std::string> docIds;
  ModelConfig config;
  FlatClustering clustering;

  friend bool operator==(const FlatClusteringFile&, const FlatClusteringFile&) = default;
};

struct DendrogramFile {
  Lexicon lexicon;
  std::vector<std::string> docIds;
  ModelConfig config;
  FeaturePartition partition;
  Dendrogram dendrogram;
  LogML flatLogML = 0.0;
  LogML finalLogML = 0.0;

  friend bool operator==(const DendrogramFile&, const DendrogramFile&) = default;
};

struct LabelingFile {
  std::vector<std::string> items;
  Labeling labeling;
};

struct TruthLevel {
  std::string name;
  Labeling labeling;
};

struct TruthFile {
  std::vector<std::string> items;
  std::string shape;
  /// Coarsest level first, the leaf level last.
  std::vector<TruthLevel> levels;
  GroundTruth truth;
  Lexicon lexicon;
};

Json to_json(const FlatClusteringFile& f);
Json to_json(const DendrogramFile& f);
Json to_json(const LabelingFile& f);
Json to_json(const TruthFile& f);

FlatClusteringFile flat_from_json(const Json& j);
/// Rebuilds the tree by replaying the merge trace over the leaves and checks
/// the serialized structure against it.
DendrogramFile dendrogram_from_json(const Json& j);
LabelingFile labeling_from_json(const Json& j);
TruthFile truth_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace mbhc
