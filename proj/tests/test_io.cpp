#include "doctest.h"

#include <map>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "mbhc/io.hpp"
#include "oracles.hpp"

using namespace mbhc;

namespace {

Corpus from_text(const std::string& text, CorpusFormat format, std::size_t minDf = 1) {
  std::istringstream in(text);
  return ingest(in, {format, minDf, true});
}

std::string error_of(const std::string& text, CorpusFormat format) {
  try {
    from_text(text, format);
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("tokenizer") {
  CHECK(tokenize("Hello, world! x2  foo-bar", true) == std::vector<std::string>{"hello", "world", "x2", "foo", "bar"});
  CHECK(tokenize("Hello", false) == std::vector<std::string>{"Hello"});
  CHECK(tokenize("caf\xc3\xa9 au", true) == std::vector<std::string>{"caf\xc3\xa9", "au"});
  CHECK(tokenize(" ,.; ", true).empty());
}

TEST_CASE("ingest examples") {
  auto c = from_text("{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d2\",\"text\":\"b\"}\n", CorpusFormat::Jsonl);
  CHECK(c.matrix.doc_count() == 2);
  CHECK(c.matrix.feature_count() == 2);
  CHECK(c.matrix.row(0).size() == 1);
  CHECK(c.matrix.row(0)[0].count == 1);
  CHECK(c.matrix.row(1)[0].feature == 1);
  CHECK(c.docIds == std::vector<std::string>{"d1", "d2"});

  auto t = from_text("d1\tcat\t3\n", CorpusFormat::Counts);
  CHECK(t.matrix.row(0)[0].count == 3);
  CHECK(t.lexicon.term(t.matrix.row(0)[0].feature) == "cat");
}

TEST_CASE("jsonl counts repeated words and lowercases") {
  auto c = from_text("{\"id\":\"x\",\"text\":\"The cat saw the CAT.\"}\n\n", CorpusFormat::Jsonl);
  CHECK(c.lexicon.terms() == std::vector<std::string>{"the", "cat", "saw"});
  CHECK(c.matrix.doc_total(0) == 5);
  CHECK(c.matrix.row(0)[0].count == 2);
  std::istringstream in("{\"id\":\"x\",\"text\":\"The the\"}\n");
  auto keep = ingest(in, {CorpusFormat::Jsonl, 1, false});
  CHECK(keep.lexicon.size() == 2);
}

TEST_CASE("min document frequency matches a naive recount") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> word(0, 14), len(1, 8);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<std::string>> docs;
    std::string text;
    for (int d = 0; d < 12; ++d) {
      docs.emplace_back();
      int n = len(rng);
      for (int i = 0; i < n; ++i) docs.back().push_back("w" + std::to_string(word(rng)));
      for (const auto& w : docs.back()) text += "d" + std::to_string(d) + "\t" + w + "\t1\n";
    }
    // Drop repeated (doc, word) lines so the counts file stays valid.
    std::istringstream lines(text);
    std::set<std::string> seen;
    std::string dedup, line;
    while (std::getline(lines, line))
      if (seen.insert(line).second) dedup += line + "\n";

    const std::size_t minDf = 2 + trial % 3;
    std::map<std::string, std::set<int>> df;
    for (int d = 0; d < 12; ++d)
      for (const auto& w : docs[d]) df[w].insert(d);
    std::set<std::string> kept;
    for (const auto& [w, ds] : df)
      if (ds.size() >= minDf) kept.insert(w);
    if (kept.empty()) {
      CHECK_THROWS_AS(from_text(dedup, CorpusFormat::Counts, minDf), InputError);
      continue;
    }
    auto c = from_text(dedup, CorpusFormat::Counts, minDf);
    CHECK(std::set<std::string>(c.lexicon.terms().begin(), c.lexicon.terms().end()) == kept);
    for (DocId d = 0; d < c.matrix.doc_count(); ++d) {
      int doc = std::stoi(c.docIds[d].substr(1));
      std::set<std::string> expect;
      for (const auto& w : docs[doc])
        if (kept.count(w)) expect.insert(w);
      std::set<std::string> got;
      for (const auto& tc : c.matrix.row(d)) {
        got.insert(c.lexicon.term(tc.feature));
        CHECK(tc.count == 1);
      }
      CHECK(got == expect);
    }
  }
}

TEST_CASE("malformed input reports the line") {
  CHECK(error_of("{\"id\":\"a\",\"text\":\"x\"}\nnot json\n", CorpusFormat::Jsonl).find("line 2") != std::string::npos);
  CHECK(error_of("{\"id\":\"a\"}\n", CorpusFormat::Jsonl).find("line 1") != std::string::npos);
  CHECK(error_of("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n", CorpusFormat::Jsonl).find("duplicate") !=
        std::string::npos);
  CHECK(error_of("d1\tcat\n", CorpusFormat::Counts).find("line 1") != std::string::npos);
  CHECK(error_of("# c\nd1\tcat\t0\n", CorpusFormat::Counts).find("line 2") != std::string::npos);
  CHECK(error_of("d1\tcat\t2x\n", CorpusFormat::Counts).find("line 1") != std::string::npos);
  CHECK(error_of("d1\tcat\t2\nd1\tcat\t1\n", CorpusFormat::Counts).find("line 2") != std::string::npos);
  CHECK(error_of("", CorpusFormat::Counts).find("no documents") != std::string::npos);
  CHECK(error_of("{\"id\":\"a\",\"text\":\"...\"}\n", CorpusFormat::Jsonl).find("empty") != std::string::npos);
  CHECK_THROWS_AS(ingest_file("/nonexistent/file.jsonl", {}), InputError);
}

TEST_CASE("format from extension") {
  CHECK(format_for_path("a/b.jsonl") == CorpusFormat::Jsonl);
  CHECK(format_for_path("x.tsv") == CorpusFormat::Counts);
  CHECK_THROWS_AS(format_for_path("x.bin"), InputError);
}

TEST_CASE("counts writer round-trips") {
  auto c = from_text("{\"id\":\"p\",\"text\":\"b a b\"}\n{\"id\":\"q\",\"text\":\"c\"}\n", CorpusFormat::Jsonl);
  std::ostringstream out;
  write_counts(out, c);
  auto back = from_text(out.str(), CorpusFormat::Counts);
  CHECK(back.matrix == c.matrix);
  CHECK(back.lexicon == c.lexicon);
  CHECK(back.docIds == c.docIds);
}

TEST_CASE("config JSON") {
  ModelConfig c;
  c.alpha.perFeature = {0.5, 2.0};
  c.kMin = 2;
  c.kMax = 9;
  c.prefixRule = PrefixRule::BestPrefix;
  c.mode = MergeMode::NoFeatureSelection;
  c.rootNoise = true;
  c.seed = 77;
  CHECK(config_from_json(config_to_json(c)) == c);
  ModelConfig base;
  base.restarts = 7;
  auto over = config_from_json(Json::parse(R"({"seed": 3})"), base);
  CHECK(over.seed == 3);
  CHECK(over.restarts == 7);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"sede": 3})")), InputError);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"seed": "x"})")), InputError);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"mode": "soft"})")), InputError);
}

TEST_CASE("artifact round trips") {
  std::mt19937_64 rng(13);
  ModelConfig cfg;
  cfg.alpha.value = 0.5;
  auto m = oracle::random_matrix(rng, 30, 8);
  auto part = FeaturePartition::with_noise(FeatureSet{2}, 8);
  auto flat = fixtures::random_flat(m, 5, part, rng);
  flat.score = -12.5;
  flat.seed = 4;
  Lexicon lex;
  for (int j = 0; j < 8; ++j) lex.add("t" + std::to_string(j));
  std::vector<std::string> ids;
  for (int d = 0; d < 30; ++d) ids.push_back("doc" + std::to_string(d));

  FlatClusteringFile ff{lex, ids, cfg, flat};
  auto ffBack = flat_from_json(Json::parse(to_json(ff).dump()));
  CHECK(ffBack == ff);

  for (std::size_t merges : {0, 2, 4}) {
    DendrogramFile df{lex, ids, cfg, part, fixtures::random_hierarchy(flat, cfg, rng, merges), -100.25, -99.5};
    auto back = dendrogram_from_json(Json::parse(to_json(df).dump()));
    CHECK(back == df);

    auto tampered = to_json(df);
    tampered["nodes"][0]["stats"]["tokens"] = 123456;
    CHECK_THROWS_AS(dendrogram_from_json(tampered), InputError);
  }
  auto wrong = to_json(ff);
  wrong["format"] = "mbhc.flat/9";
  CHECK_THROWS_AS(flat_from_json(wrong), InputError);
  CHECK_THROWS_AS(dendrogram_from_json(to_json(ff)), InputError);

  LabelingFile lf{{"a", "b", "c"}, Labeling::from_ids(std::vector<ClusterId>{4, 4, 1})};
  auto lb = labeling_from_json(to_json(lf));
  CHECK(lb.items == lf.items);
  CHECK(lb.labeling == lf.labeling);
  auto badLabel = to_json(lf);
  badLabel["labels"][0] = 5;
  CHECK_THROWS_AS(labeling_from_json(badLabel), InputError);
}

TEST_CASE("truth file round trip") {
  auto spec = StructureSpec::structure1();
  spec.docsPerLeaf = 5;
  auto c = sample(gen_params(spec), spec);
  TruthFile t;
  for (int j = 0; j < 50; ++j) t.lexicon.add("f" + std::to_string(j));
  for (std::size_t d = 0; d < c.data.doc_count(); ++d) t.items.push_back("d" + std::to_string(d));
  t.shape = format_shape(spec.shape);
  t.levels.push_back({"depth-1", Labeling::from_ids(c.truth.levelLabels[0])});
  t.levels.push_back({"leaf", Labeling::from_ids(c.truth.leafLabels)});
  t.truth = c.truth;
  auto back = truth_from_json(Json::parse(to_json(t).dump()));
  CHECK(back.items == t.items);
  CHECK(back.shape == t.shape);
  REQUIRE(back.levels.size() == 2);
  CHECK(back.levels[1].labeling == t.levels[1].labeling);
  REQUIRE(back.truth.nodes.size() == t.truth.nodes.size());
  for (std::size_t i = 0; i < t.truth.nodes.size(); ++i) {
    CHECK(back.truth.nodes[i].noise == t.truth.nodes[i].noise);
    CHECK(back.truth.nodes[i].params == t.truth.nodes[i].params);
    CHECK(back.truth.nodes[i].parent == t.truth.nodes[i].parent);
  }
  CHECK(back.truth.root == t.truth.root);
  CHECK(back.truth.leafNodes == t.truth.leafNodes);
}
