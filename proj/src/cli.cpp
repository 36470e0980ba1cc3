#include "mbhc/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "mbhc/evaluation.hpp"
#include "mbhc/flat_em.hpp"
#include "mbhc/io.hpp"
#include "mbhc/likelihood.hpp"
#include "mbhc/mhac.hpp"
#include "mbhc/synthgen.hpp"

namespace mbhc {

namespace {

struct ModelFlags {
  std::string configPath;
  std::string kRange;
  std::optional<std::size_t> restarts;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::string prefixRule;
  std::string mode;
  std::string rootNoise;
};

struct CorpusFlags {
  std::string path;
  std::string format;
  std::size_t minDf = 1;
  bool keepCase = false;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  cmd->add_option("--config", f.configPath, "JSON config file (flags take precedence)");
  cmd->add_option("--k-range", f.kRange, "Candidate cluster counts, A..B");
  cmd->add_option("--restarts", f.restarts, "EM restarts per K");
  cmd->add_option("--seed", f.seed, "Base random seed");
  cmd->add_option("--alpha", f.alpha, "Symmetric Dirichlet hyperparameter for term distributions");
  cmd->add_option("--prefix-rule", f.prefixRule, "Noise prefix rule")->check(CLI::IsMember({"first-decrease", "best"}));
  cmd->add_option("--mode", f.mode, "Merge mode")->check(CLI::IsMember({"fs", "nofs"}));
  cmd->add_option("--root-noise", f.rootNoise, "Search a root-level noise set")->check(CLI::IsMember({"on", "off"}));
}

void add_corpus_flags(CLI::App* cmd, CorpusFlags& f, bool required) {
  auto* opt = cmd->add_option("corpus", f.path, "Corpus file (.jsonl or tab-separated counts)");
  if (required) opt->required();
  cmd->add_option("--format", f.format, "Corpus format, inferred from the extension by default")
      ->check(CLI::IsMember({"jsonl", "counts"}));
  cmd->add_option("--min-df", f.minDf, "Drop terms found in fewer documents");
  cmd->add_flag("--keep-case", f.keepCase, "Do not lowercase jsonl text");
}

std::pair<std::size_t, std::size_t> parse_k_range(const std::string& text) {
  auto dots = text.find("..");
  if (dots == std::string::npos) throw InputError("--k-range expects A..B, got '" + text + "'");
  try {
    std::size_t used = 0;
    auto a = std::stoul(text.substr(0, dots), &used);
    if (used != dots) throw std::invalid_argument(text);
    auto rest = text.substr(dots + 2);
    auto b = std::stoul(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
    return {a, b};
  } catch (const std::logic_error&) {
    throw InputError("--k-range expects A..B, got '" + text + "'");
  }
}

ModelConfig resolve_config(const ModelFlags& f, ModelConfig base) {
  if (!f.configPath.empty()) base = config_from_json(read_json_file(f.configPath), base);
  if (!f.kRange.empty()) std::tie(base.kMin, base.kMax) = parse_k_range(f.kRange);
  if (f.restarts) base.restarts = *f.restarts;
  if (f.seed) base.seed = *f.seed;
  if (f.alpha) base.alpha = Hyperparameter{*f.alpha, {}};
  if (!f.prefixRule.empty()) base.prefixRule = parse_prefix_rule(f.prefixRule);
  if (!f.mode.empty()) base.mode = parse_merge_mode(f.mode);
  if (!f.rootNoise.empty()) base.rootNoise = f.rootNoise == "on";
  return base;
}

Corpus load_corpus(const CorpusFlags& f) {
  IngestOptions opts;
  opts.format = f.format.empty() ? format_for_path(f.path)
                                  : (f.format == "jsonl" ? CorpusFormat::Jsonl : CorpusFormat::Counts);
  opts.minDocFreq = f.minDf;
  opts.lowercase = !f.keepCase;
  return ingest_file(f.path, opts);
}

std::string fixed6(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  return s.str();
}

FlatClustering cluster_corpus(const Corpus& corpus, const ModelConfig& config) {
  config.validate(corpus.lexicon.size());
  auto flat = select_k(corpus.matrix, FeaturePartition::all_useful(corpus.lexicon.size()), config);
  if (config.rootNoise) flat = with_partition(flat, root_noise_search(corpus.matrix, flat, config), config);
  return flat;
}

DendrogramFile load_dendrogram(const std::string& path) { return dendrogram_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------

struct ClusterCmd {
  CorpusFlags corpus;
  ModelFlags model;
  std::string output;

  int run(std::ostream& out) const {
    auto data = load_corpus(corpus);
    auto config = resolve_config(model, {});
    auto flat = cluster_corpus(data, config);
    write_json_file(output, to_json(FlatClusteringFile{data.lexicon, data.docIds, config, flat}));
    out << "documents: " << data.docIds.size() << "\nfeatures: " << data.lexicon.size() << "\nK: " << flat.K
        << "\nnoise features: " << flat.partition.noise.size() << "\nflat log-ML: " << fixed6(flat.score) << '\n';
    return 0;
  }
};

struct HierarchyCmd {
  CorpusFlags corpus;
  ModelFlags model;
  std::string flatPath;
  std::string output;

  int run(std::ostream& out) const {
    DendrogramFile f;
    FlatClustering flat;
    if (!flatPath.empty()) {
      auto in = flat_from_json(read_json_file(flatPath));
      f.config = resolve_config(model, in.config);
      f.config.validate(in.lexicon.size());
      f.lexicon = std::move(in.lexicon);
      f.docIds = std::move(in.docIds);
      flat = std::move(in.clustering);
    } else {
      auto data = load_corpus(corpus);
      f.config = resolve_config(model, {});
      flat = cluster_corpus(data, f.config);
      f.lexicon = std::move(data.lexicon);
      f.docIds = std::move(data.docIds);
    }
    f.partition = flat.partition;
    f.dendrogram = run_mhac(flat, f.config);
    f.flatLogML = log_flat(flat.stats, f.partition, f.config);
    f.finalLogML = log_hierarchy(f.dendrogram, f.partition, f.config);
    write_json_file(output, to_json(f));
    out << "leaves: " << f.dendrogram.leaf_count() << "\nmerges: " << f.dendrogram.mergeTrace.size()
        << "\nflat log-ML: " << fixed6(f.flatLogML) << "\nfinal log-ML: " << fixed6(f.finalLogML) << '\n';
    return 0;
  }
};

struct SynthCmd {
  std::string structure;
  std::string shape;
  std::uint64_t seed = 1;
  std::size_t docsPerLeaf = 500;
  std::size_t tokensPerDoc = 100;
  std::size_t features = 50;
  double minUsefulMass = 0.5;
  std::string output;
  std::string truthPath;

  int run(std::ostream& out) const {
    StructureSpec spec;
    if (!shape.empty())
      spec.shape = parse_shape(shape);
    else
      spec = structure == "2" ? StructureSpec::structure2() : StructureSpec::structure1();
    spec.seed = seed;
    spec.docsPerLeaf = docsPerLeaf;
    spec.tokensPerDoc = tokensPerDoc;
    spec.featureCount = features;
    spec.minUsefulMass = minUsefulMass;

    auto corpus = sample(gen_params(spec), spec);
    const auto featureWidth = std::to_string(features - 1).size();
    const auto docWidth = std::to_string(std::max<std::size_t>(corpus.data.doc_count(), 1) - 1).size();
    auto padded = [](const char* prefix, std::size_t i, std::size_t width) {
      auto digits = std::to_string(i);
      return prefix + std::string(width - digits.size(), '0') + digits;
    };

    Corpus c;
    c.matrix = corpus.data;
    for (std::size_t j = 0; j < features; ++j) c.lexicon.add(padded("f", j, featureWidth));
    for (std::size_t d = 0; d < corpus.data.doc_count(); ++d) c.docIds.push_back(padded("doc", d, docWidth));

    std::ofstream os(output);
    if (!os) throw InputError("cannot write '" + output + "'");
    write_counts(os, c);
    if (!os) throw InputError("failed writing '" + output + "'");

    TruthFile t;
    t.items = c.docIds;
    t.shape = format_shape(spec.shape);
    t.lexicon = c.lexicon;
    for (std::size_t i = 0; i < corpus.truth.levelLabels.size(); ++i)
      t.levels.push_back({"depth-" + std::to_string(i + 1), Labeling::from_ids(corpus.truth.levelLabels[i])});
    t.levels.push_back({"leaf", Labeling::from_ids(corpus.truth.leafLabels)});
    t.truth = std::move(corpus.truth);
    write_json_file(truthPath, to_json(t));

    out << "shape: " << t.shape << "\ndocuments: " << t.items.size() << "\nfeatures: " << features << '\n';
    return 0;
  }
};

struct EvalCmd {
  std::string dendrogramPath;
  std::string truthPath;
  bool csv = false;

  int run(std::ostream& out) const {
    auto f = load_dendrogram(dendrogramPath);
    auto t = truth_from_json(read_json_file(truthPath));

    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < t.items.size(); ++i) position[t.items[i]] = i;
    if (position.size() != f.docIds.size()) throw InputError("truth and dendrogram cover different documents");
    std::vector<std::size_t> order;
    for (const auto& id : f.docIds) {
      auto it = position.find(id);
      if (it == position.end()) throw InputError("document '" + id + "' has no truth label");
      order.push_back(it->second);
    }
    auto aligned = [&](const Labeling& l) {
      Labeling a;
      a.k = l.k;
      for (auto i : order) a.labels.push_back(l.labels[i]);
      return a;
    };

    out << "merges: " << f.dendrogram.mergeTrace.size() << "\nleaves: " << f.dendrogram.leaf_count()
        << "\nflat log-ML: " << fixed6(f.flatLogML) << "\nfinal log-ML: " << fixed6(f.finalLogML) << '\n';
    const char* sep = csv ? "," : "\t";
    out << "level" << sep << "k" << sep << "nmi" << '\n';
    for (std::size_t i = 0; i < t.levels.size(); ++i) {
      const auto& level = t.levels[i];
      const bool isLeaf = i + 1 == t.levels.size();
      std::string score = "n/a";
      std::size_t k = isLeaf ? f.dendrogram.leaf_count() : level.labeling.k;
      if (k <= f.dendrogram.leaf_count()) {
        try {
          auto predicted = isLeaf ? leaf_labeling(f.dendrogram) : cut(f.dendrogram, k);
          score = fixed6(nmi(predicted, aligned(level.labeling)));
        } catch (const InputError&) {
          // The dendrogram cannot be cut into k groups.
        }
      }
      out << level.name << sep << k << sep << score << '\n';
    }
    return 0;
  }
};

struct CutCmd {
  std::string dendrogramPath;
  std::size_t k = 0;
  std::string output;

  int run(std::ostream& out) const {
    auto f = load_dendrogram(dendrogramPath);
    LabelingFile l{f.docIds, cut(f.dendrogram, k)};
    write_json_file(output, to_json(l));
    out << "categories: " << l.labeling.k << '\n';
    return 0;
  }
};

struct LabelsCmd {
  std::string dendrogramPath;
  std::size_t top = 10;
  std::optional<NodeId> node;

  int run(std::ostream& out) const {
    auto f = load_dendrogram(dendrogramPath);
    const auto& d = f.dendrogram;
    std::vector<NodeId> ids;
    if (node) {
      if (!d.nodes.count(*node)) throw InputError("no node " + std::to_string(*node) + " in the dendrogram");
      ids.push_back(*node);
    } else {
      for (const auto& [id, n] : d.nodes)
        if (!n.is_leaf()) ids.push_back(id);
    }
    for (auto id : ids) {
      out << "node " << id << " (" << d.node(id).stats.doc_count() << " docs):";
      for (const auto& term : node_labels(d, id, f.lexicon, top)) out << ' ' << term;
      out << '\n';
    }
    return 0;
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model-based hierarchical clustering of bag-of-words corpora", "mbhc"};
  app.require_subcommand(1);

  ClusterCmd cluster;
  auto* cc = app.add_subcommand("cluster", "Flat EM clustering with model selection over K");
  add_corpus_flags(cc, cluster.corpus, true);
  add_model_flags(cc, cluster.model);
  cc->add_option("-o,--output", cluster.output, "Flat clustering file")->required();

  HierarchyCmd hierarchy;
  auto* hc = app.add_subcommand("hierarchy", "Build a dendrogram from a corpus or a flat clustering");
  add_corpus_flags(hc, hierarchy.corpus, false);
  add_model_flags(hc, hierarchy.model);
  hc->add_option("--flat", hierarchy.flatPath, "Start from a flat clustering file");
  hc->add_option("-o,--output", hierarchy.output, "Dendrogram file")->required();

  SynthCmd synth;
  auto* sc = app.add_subcommand("synth", "Sample a synthetic corpus with a known hierarchy");
  auto* structureOpt =
      sc->add_option("--structure", synth.structure, "Built-in structure")->check(CLI::IsMember({"1", "2"}));
  sc->add_option("--shape", synth.shape, "Tree shape such as ((*,*):15,(*,*):21)")->excludes(structureOpt);
  sc->add_option("--seed", synth.seed, "Random seed");
  sc->add_option("--docs-per-leaf", synth.docsPerLeaf, "Documents drawn per leaf");
  sc->add_option("--tokens-per-doc", synth.tokensPerDoc, "Tokens per document");
  sc->add_option("--features", synth.features, "Vocabulary size")->check(CLI::PositiveNumber);
  sc->add_option("--min-useful-mass", synth.minUsefulMass, "Lower bound on each leaf's useful mass");
  sc->add_option("-o,--output", synth.output, "Corpus file (counts format)")->required();
  sc->add_option("--truth", synth.truthPath, "Ground-truth file")->required();

  EvalCmd eval;
  auto* ec = app.add_subcommand("eval", "NMI of dendrogram cuts against ground truth");
  ec->add_option("dendrogram", eval.dendrogramPath, "Dendrogram file")->required();
  ec->add_option("--truth", eval.truthPath, "Ground-truth file")->required();
  ec->add_flag("--csv", eval.csv, "Comma-separated table");

  CutCmd cutCmd;
  auto* kc = app.add_subcommand("cut", "Cut a dendrogram into k groups");
  kc->add_option("dendrogram", cutCmd.dendrogramPath, "Dendrogram file")->required();
  kc->add_option("--k", cutCmd.k, "Number of groups")->required();
  kc->add_option("-o,--output", cutCmd.output, "Labeling file")->required();

  LabelsCmd labels;
  auto* lc = app.add_subcommand("labels", "Print the top noise terms of internal nodes");
  lc->add_option("dendrogram", labels.dendrogramPath, "Dendrogram file")->required();
  lc->add_option("--top", labels.top, "Terms per node");
  lc->add_option("--node", labels.node, "Only this node");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (cc->parsed()) return cluster.run(out);
    if (hc->parsed()) {
      if (hierarchy.flatPath.empty() == hierarchy.corpus.path.empty())
        throw InputError("hierarchy needs either a corpus or --flat, not both");
      return hierarchy.run(out);
    }
    if (sc->parsed()) {
      if (synth.shape.empty() && synth.structure.empty()) throw InputError("synth needs --structure or --shape");
      return synth.run(out);
    }
    if (ec->parsed()) return eval.run(out);
    if (kc->parsed()) return cutCmd.run(out);
    if (lc->parsed()) return labels.run(out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace mbhc
