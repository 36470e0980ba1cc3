#include "mbhc/io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace mbhc {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

[[noreturn]] void line_error(std::size_t line, const std::string& what) {
  throw InputError("line " + std::to_string(line) + ": " + what);
}

struct RawDoc {
  std::string id;
  std::vector<std::pair<std::string, Count>> terms;
};

Corpus build_corpus(std::vector<RawDoc> docs, std::size_t minDocFreq) {
  if (docs.empty()) throw InputError("corpus has no documents");
  std::unordered_map<std::string, std::size_t> df;
  std::vector<std::string> seen;
  for (const auto& d : docs)
    for (const auto& [t, c] : d.terms)
      if (df[t]++ == 0) seen.push_back(t);

  Corpus corpus;
  for (const auto& t : seen)
    if (df[t] >= minDocFreq) corpus.lexicon.add(t);
  if (corpus.lexicon.size() == 0) throw InputError("corpus is empty after vocabulary pruning");

  corpus.matrix = SparseDocMatrix(corpus.lexicon.size());
  for (auto& d : docs) {
    std::vector<TermCount> row;
    for (const auto& [t, c] : d.terms)
      if (auto id = corpus.lexicon.find(t)) row.push_back({*id, c});
    corpus.matrix.add_row(std::move(row));
    corpus.docIds.push_back(std::move(d.id));
  }
  return corpus;
}

std::vector<RawDoc> read_jsonl(std::istream& in, bool lowercase) {
  std::vector<RawDoc> docs;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error& e) {
      line_error(lineNo, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec.contains("text") || !rec["text"].is_string())
      line_error(lineNo, "expected an object with string fields \"id\" and \"text\"");
    std::string id = rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
    if (!ids.insert(id).second) line_error(lineNo, "duplicate document id '" + id + "'");

    RawDoc doc{id, {}};
    std::map<std::string, Count> counts;
    std::vector<std::string> order;
    for (auto& tok : tokenize(rec["text"].get<std::string>(), lowercase))
      if (counts[tok]++ == 0) order.push_back(tok);
    for (auto& t : order) doc.terms.emplace_back(t, counts[t]);
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<RawDoc> read_counts(std::istream& in) {
  std::vector<RawDoc> docs;
  std::unordered_map<std::string, std::size_t> index;
  std::set<std::pair<std::size_t, std::string>> pairs;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '\t');) fields.push_back(f);
    if (fields.size() != 3) line_error(lineNo, "expected doc-id<TAB>term<TAB>count");
    Count count = 0;
    try {
      std::size_t used = 0;
      count = std::stoll(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      line_error(lineNo, "count '" + fields[2] + "' is not an integer");
    }
    if (count < 1) line_error(lineNo, "counts must be positive");
    if (fields[0].empty() || fields[1].empty()) line_error(lineNo, "empty document id or term");
    auto [it, fresh] = index.try_emplace(fields[0], docs.size());
    if (fresh) docs.push_back({fields[0], {}});
    if (!pairs.emplace(it->second, fields[1]).second)
      line_error(lineNo, "duplicate term '" + fields[1] + "' for document '" + fields[0] + "'");
    docs[it->second].terms.emplace_back(fields[1], count);
  }
  return docs;
}

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed ") + what + ": " + e.what());
  }
}

void expect_format(const Json& j, std::string_view tag) {
  if (!j.is_object() || !j.contains("format") || j["format"] != tag)
    throw InputError("expected a document with format tag '" + std::string(tag) + "'");
}

Json hyper_to_json(const Hyperparameter& h) {
  if (h.perFeature.empty()) return h.value;
  return h.perFeature;
}

Hyperparameter hyper_from_json(const Json& j) {
  Hyperparameter h;
  if (j.is_number())
    h.value = j.get<double>();
  else
    h.perFeature = j.get<std::vector<double>>();
  return h;
}

Json terms_of(const FeatureSet& s, const Lexicon& lex) {
  Json out = Json::array();
  for (auto j : s) out.push_back(lex.term(j));
  return out;
}

FeatureSet set_of(const Json& terms, const Lexicon& lex) {
  std::vector<FeatureId> ids;
  for (const auto& t : terms) {
    auto id = lex.find(t.get<std::string>());
    if (!id) throw InputError("term '" + t.get<std::string>() + "' is not in the lexicon");
    ids.push_back(*id);
  }
  return FeatureSet(std::move(ids));
}

Json stats_to_json(const ClusterStats& s) {
  Json counts = Json::array();
  for (const auto& tc : s.term_counts()) counts.push_back({tc.feature, tc.count});
  return {{"docs", s.doc_count()}, {"tokens", s.total_tokens()}, {"counts", std::move(counts)}};
}

ClusterStats stats_from_json(const Json& j, std::size_t featureCount) {
  std::vector<TermCount> counts;
  for (const auto& c : j.at("counts")) {
    auto f = c.at(0).get<FeatureId>();
    if (f >= featureCount) throw InputError("stats reference a feature outside the lexicon");
    counts.push_back({f, c.at(1).get<Count>()});
  }
  ClusterStats s(std::move(counts), j.at("docs").get<Count>());
  if (j.contains("tokens") && j["tokens"].get<Count>() != s.total_tokens())
    throw InputError("stats token total does not match the counts");
  return s;
}

Json labeling_json(const Labeling& l) { return l.labels; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur.push_back(lowercase && c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Corpus ingest(std::istream& in, const IngestOptions& options) {
  auto docs = options.format == CorpusFormat::Jsonl ? read_jsonl(in, options.lowercase) : read_counts(in);
  return build_corpus(std::move(docs), options.minDocFreq);
}

Corpus ingest_file(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus file '" + path + "'");
  return ingest(in, options);
}

CorpusFormat format_for_path(std::string_view path) {
  auto ends = [&](std::string_view suffix) {
    return path.size() >= suffix.size() && path.substr(path.size() - suffix.size()) == suffix;
  };
  if (ends(".jsonl") || ends(".json")) return CorpusFormat::Jsonl;
  if (ends(".tsv") || ends(".counts") || ends(".txt")) return CorpusFormat::Counts;
  throw InputError("cannot infer corpus format from '" + std::string(path) + "'; pass --format");
}

void write_counts(std::ostream& out, const Corpus& corpus) {
  for (DocId d = 0; d < corpus.matrix.doc_count(); ++d)
    for (const auto& tc : corpus.matrix.row(d))
      out << corpus.docIds[d] << '\t' << corpus.lexicon.term(tc.feature) << '\t' << tc.count << '\n';
}

Json config_to_json(const ModelConfig& c) {
  return {{"alpha", hyper_to_json(c.alpha)},
          {"beta", hyper_to_json(c.beta)},
          {"gammaU", c.gammaU},
          {"gammaN", c.gammaN},
          {"sigma", c.sigma},
          {"kRange", {c.kMin, c.kMax}},
          {"restarts", c.restarts},
          {"seed", c.seed},
          {"emMaxIters", c.emMaxIters},
          {"emTol", c.emTol},
          {"prefixRule", to_string(c.prefixRule)},
          {"mode", to_string(c.mode)},
          {"rootNoise", c.rootNoise},
          {"denseThreshold", c.denseThreshold}};
}

ModelConfig config_from_json(const Json& j, ModelConfig c) {
  return guarded("config", [&] {
    if (!j.is_object()) throw InputError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (key == "alpha")
        c.alpha = hyper_from_json(v);
      else if (key == "beta")
        c.beta = hyper_from_json(v);
      else if (key == "gammaU")
        c.gammaU = v.get<double>();
      else if (key == "gammaN")
        c.gammaN = v.get<double>();
      else if (key == "sigma")
        c.sigma = v.get<double>();
      else if (key == "kRange") {
        c.kMin = v.at(0).get<std::size_t>();
        c.kMax = v.at(1).get<std::size_t>();
      } else if (key == "restarts")
        c.restarts = v.get<std::size_t>();
      else if (key == "seed")
        c.seed = v.get<std::uint64_t>();
      else if (key == "emMaxIters")
        c.emMaxIters = v.get<std::size_t>();
      else if (key == "emTol")
        c.emTol = v.get<double>();
      else if (key == "prefixRule")
        c.prefixRule = parse_prefix_rule(v.get<std::string>());
      else if (key == "mode")
        c.mode = parse_merge_mode(v.get<std::string>());
      else if (key == "rootNoise")
        c.rootNoise = v.get<bool>();
      else if (key == "denseThreshold")
        c.denseThreshold = v.get<std::size_t>();
      else
        throw InputError("unknown config key '" + key + "'");
    }
    return c;
  });
}

Json to_json(const FlatClusteringFile& f) {
  const auto& c = f.clustering;
  Json stats = Json::array();
  for (const auto& s : c.stats) stats.push_back(stats_to_json(s));
  return {{"format", kFlatFormat},
          {"config", config_to_json(f.config)},
          {"lexicon", f.lexicon.terms()},
          {"documents", f.docIds},
          {"K", c.K},
          {"seed", c.seed},
          {"iterations", c.iterations},
          {"droppedClusters", c.droppedClusters},
          {"score", c.score},
          {"noise", terms_of(c.partition.noise, f.lexicon)},
          {"assignments", c.assignments},
          {"stats", std::move(stats)}};
}

FlatClusteringFile flat_from_json(const Json& j) {
  return guarded("flat clustering file", [&] {
    expect_format(j, kFlatFormat);
    FlatClusteringFile f;
    f.lexicon = Lexicon(j.at("lexicon").get<std::vector<std::string>>());
    f.docIds = j.at("documents").get<std::vector<std::string>>();
    f.config = config_from_json(j.at("config"));
    auto& c = f.clustering;
    c.K = j.at("K").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.iterations = j.at("iterations").get<std::size_t>();
    c.droppedClusters = j.at("droppedClusters").get<std::size_t>();
    c.score = j.at("score").get<double>();
    c.partition = FeaturePartition::with_noise(set_of(j.at("noise"), f.lexicon), f.lexicon.size());
    c.assignments = j.at("assignments").get<std::vector<ClusterId>>();
    for (const auto& s : j.at("stats")) c.stats.push_back(stats_from_json(s, f.lexicon.size()));
    if (c.stats.size() != c.K) throw InputError("flat clustering has " + std::to_string(c.stats.size()) + " stats for K=" + std::to_string(c.K));
    if (c.assignments.size() != f.docIds.size()) throw InputError("assignment count does not match documents");
    for (auto k : c.assignments)
      if (k >= c.K) throw InputError("assignment out of range");
    return f;
  });
}

Json to_json(const DendrogramFile& f) {
  const auto& d = f.dendrogram;
  Json nodes = Json::array();
  for (const auto& [id, n] : d.nodes) {
    Json node = {{"id", id},
                 {"children", n.children},
                 {"parent", n.parent ? Json(*n.parent) : Json(nullptr)},
                 {"localNoise", terms_of(n.localNoise, f.lexicon)}};
    if (n.is_leaf()) {
      node["stats"] = stats_to_json(n.stats);
      node["members"] = n.memberDocs;
    } else {
      node["stats"] = {{"docs", n.stats.doc_count()}, {"tokens", n.stats.total_tokens()}};
    }
    nodes.push_back(std::move(node));
  }
  Json trace = Json::array();
  for (const auto& m : d.mergeTrace)
    trace.push_back({{"left", m.left},
                     {"right", m.right},
                     {"merged", m.merged},
                     {"noise", terms_of(m.noise, f.lexicon)},
                     {"delta", m.delta}});
  return {{"format", kDendrogramFormat},
          {"config", config_to_json(f.config)},
          {"lexicon", f.lexicon.terms()},
          {"documents", f.docIds},
          {"noise", terms_of(f.partition.noise, f.lexicon)},
          {"scores", {{"flatLogML", f.flatLogML}, {"finalLogML", f.finalLogML}}},
          {"merges", d.mergeTrace.size()},
          {"root", d.root},
          {"syntheticRoot", d.syntheticRoot},
          {"nodes", std::move(nodes)},
          {"mergeTrace", std::move(trace)}};
}

DendrogramFile dendrogram_from_json(const Json& j) {
  return guarded("dendrogram file", [&] {
    expect_format(j, kDendrogramFormat);
    DendrogramFile f;
    f.lexicon = Lexicon(j.at("lexicon").get<std::vector<std::string>>());
    f.docIds = j.at("documents").get<std::vector<std::string>>();
    f.config = config_from_json(j.at("config"));
    f.partition = FeaturePartition::with_noise(set_of(j.at("noise"), f.lexicon), f.lexicon.size());
    f.flatLogML = j.at("scores").at("flatLogML").get<double>();
    f.finalLogML = j.at("scores").at("finalLogML").get<double>();

    std::vector<HierarchyNode> leaves;
    for (const auto& n : j.at("nodes")) {
      if (!n.at("children").empty()) continue;
      HierarchyNode leaf;
      leaf.id = n.at("id").get<NodeId>();
      leaf.eligible = f.partition.useful;
      leaf.stats = stats_from_json(n.at("stats"), f.lexicon.size());
      leaf.memberDocs = n.at("members").get<std::vector<DocId>>();
      leaves.push_back(std::move(leaf));
    }
    std::vector<MergeRecord> trace;
    for (const auto& m : j.at("mergeTrace"))
      trace.push_back({m.at("left").get<NodeId>(), m.at("right").get<NodeId>(), m.at("merged").get<NodeId>(),
                       set_of(m.at("noise"), f.lexicon), m.at("delta").get<double>()});
    f.dendrogram = Dendrogram::replay(std::move(leaves), trace, j.at("syntheticRoot").get<bool>());

    const auto& d = f.dendrogram;
    if (d.root != j.at("root").get<NodeId>()) throw InputError("root id does not match the merge trace");
    if (j.at("nodes").size() != d.nodes.size()) throw InputError("node list does not match the merge trace");
    for (const auto& n : j.at("nodes")) {
      const auto& built = d.node(n.at("id").get<NodeId>());
      if (built.children != n.at("children").get<std::vector<NodeId>>() ||
          built.localNoise != set_of(n.at("localNoise"), f.lexicon) ||
          built.stats.total_tokens() != n.at("stats").at("tokens").get<Count>() ||
          built.stats.doc_count() != n.at("stats").at("docs").get<Count>())
        throw InputError("node " + std::to_string(built.id) + " does not match the merge trace");
    }
    return f;
  });
}

Json to_json(const LabelingFile& f) {
  return {{"format", kLabelingFormat}, {"k", f.labeling.k}, {"items", f.items}, {"labels", labeling_json(f.labeling)}};
}

LabelingFile labeling_from_json(const Json& j) {
  return guarded("labeling file", [&] {
    expect_format(j, kLabelingFormat);
    LabelingFile f;
    f.items = j.at("items").get<std::vector<std::string>>();
    f.labeling.labels = j.at("labels").get<std::vector<ClusterId>>();
    f.labeling.k = j.at("k").get<std::size_t>();
    f.labeling.validate();
    if (f.items.size() != f.labeling.labels.size()) throw InputError("labeling has mismatched items and labels");
    return f;
  });
}

Json to_json(const TruthFile& f) {
  Json levels = Json::array();
  for (const auto& l : f.levels) levels.push_back({{"name", l.name}, {"k", l.labeling.k}, {"labels", l.labeling.labels}});
  Json nodes = Json::array();
  for (const auto& n : f.truth.nodes)
    nodes.push_back({{"id", n.id},
                     {"parent", n.parent ? Json(*n.parent) : Json(nullptr)},
                     {"children", n.children},
                     {"depth", n.depth},
                     {"noise", terms_of(n.noise, f.lexicon)},
                     {"blockMass", n.blockMass},
                     {"params", n.params}});
  return {{"format", kTruthFormat}, {"shape", f.shape},     {"lexicon", f.lexicon.terms()},
          {"items", f.items},       {"levels", std::move(levels)}, {"nodes", std::move(nodes)}};
}

TruthFile truth_from_json(const Json& j) {
  return guarded("truth file", [&] {
    expect_format(j, kTruthFormat);
    TruthFile f;
    f.shape = j.at("shape").get<std::string>();
    f.items = j.at("items").get<std::vector<std::string>>();
    f.lexicon = Lexicon(j.at("lexicon").get<std::vector<std::string>>());
    for (const auto& l : j.at("levels")) {
      TruthLevel level{l.at("name").get<std::string>(), {}};
      level.labeling.labels = l.at("labels").get<std::vector<ClusterId>>();
      level.labeling.k = l.at("k").get<std::size_t>();
      level.labeling.validate();
      if (level.labeling.labels.size() != f.items.size()) throw InputError("truth level size mismatch");
      f.levels.push_back(std::move(level));
    }
    for (const auto& n : j.at("nodes")) {
      TruthNode t;
      t.id = n.at("id").get<std::size_t>();
      if (!n.at("parent").is_null()) t.parent = n.at("parent").get<std::size_t>();
      t.children = n.at("children").get<std::vector<std::size_t>>();
      t.depth = n.at("depth").get<std::size_t>();
      t.noise = set_of(n.at("noise"), f.lexicon);
      t.blockMass = n.at("blockMass").get<double>();
      t.params = n.at("params").get<std::vector<double>>();
      if (t.is_leaf()) f.truth.leafNodes.push_back(t.id);
      if (!t.parent) f.truth.root = t.id;
      f.truth.nodes.push_back(std::move(t));
    }
    return f;
  });
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
  if (!out) throw InputError("failed writing '" + path + "'");
}

}  // namespace mbhc
