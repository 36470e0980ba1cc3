#include "mbhc/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <random>

#include <omp.h>

namespace mbhc {

namespace {

class ShapeParser {
 public:
  explicit ShapeParser(std::string_view text) : text_(text) {}

  ShapeNode parse() {
    auto node = parse_node();
    skip_space();
    if (pos_ != text_.size()) fail("trailing characters");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw InputError("bad tree shape at offset " + std::to_string(pos_) + ": " + what);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ShapeNode parse_node() {
    ShapeNode node;
    if (eat('*')) return node;
    if (!eat('(')) fail("expected '*' or '('");
    do {
      node.children.push_back(parse_node());
    } while (eat(','));
    if (!eat(')')) fail("expected ')'");
    if (node.children.size() < 2) fail("internal nodes need at least two children");
    if (eat(':')) {
      skip_space();
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected a noise feature count");
      node.noise = std::stoul(std::string(text_.substr(start, pos_ - start)));
    }
    return node;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Symmetric Dirichlet(1) over `size` coordinates.
std::vector<double> draw_simplex(std::size_t size, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> v(size);
  double sum = 0.0;
  for (auto& x : v) {
    x = expo(rng);
    sum += x;
  }
  for (auto& x : v) x /= sum;
  return v;
}

struct Builder {
  GroundTruth gt;
  std::vector<const ShapeNode*> shapes;

  // Leaves get ids first (left to right), internal nodes afterwards in post-order.
  void number_leaves(const ShapeNode& s) {
    if (s.is_leaf()) {
      gt.leafNodes.push_back(gt.nodes.size());
      gt.nodes.emplace_back();
      gt.nodes.back().id = gt.nodes.size() - 1;
      shapes.push_back(&s);
      return;
    }
    for (const auto& c : s.children) number_leaves(c);
  }

  std::size_t link(const ShapeNode& s, std::size_t depth, std::size_t& nextLeaf) {
    if (s.is_leaf()) {
      auto id = gt.leafNodes[nextLeaf++];
      gt.nodes[id].depth = depth;
      return id;
    }
    std::vector<std::size_t> kids;
    for (const auto& c : s.children) kids.push_back(link(c, depth + 1, nextLeaf));
    TruthNode n;
    n.id = gt.nodes.size();
    n.depth = depth;
    n.children = kids;
    for (auto k : kids) gt.nodes[k].parent = n.id;
    gt.nodes.push_back(std::move(n));
    shapes.push_back(&s);
    return gt.nodes.back().id;
  }
};

}  // namespace

ShapeNode parse_shape(std::string_view text) { return ShapeParser(text).parse(); }

std::string format_shape(const ShapeNode& shape) {
  if (shape.is_leaf()) return "*";
  std::string out = "(";
  for (std::size_t i = 0; i < shape.children.size(); ++i) {
    if (i) out += ",";
    out += format_shape(shape.children[i]);
  }
  out += ")";
  if (shape.noise) out += ":" + std::to_string(shape.noise);
  return out;
}

StructureSpec StructureSpec::structure1() {
  StructureSpec s;
  s.shape = parse_shape("((*,*):15,(*,*):21)");
  return s;
}

StructureSpec StructureSpec::structure2() {
  StructureSpec s;
  s.shape = parse_shape("(((*,*):18,*):15,(*,*):11)");
  return s;
}

std::size_t GroundTruth::max_depth() const {
  std::size_t d = 0;
  for (auto l : leafNodes) d = std::max(d, nodes[l].depth);
  return d;
}

std::vector<FeatureSet> GroundTruth::true_noise_sets() const {
  std::vector<FeatureSet> out;
  for (const auto& n : nodes) out.push_back(n.noise);
  return out;
}

GroundTruth gen_params(const StructureSpec& spec) {
  const std::size_t M = spec.featureCount;
  if (M == 0) throw InputError("synthetic data needs at least one feature");
  if (!(spec.minUsefulMass > 0.0 && spec.minUsefulMass <= 1.0)) throw InputError("minUsefulMass must be in (0, 1]");

  Builder b;
  b.number_leaves(spec.shape);
  std::size_t nextLeaf = 0;
  b.gt.root = b.link(spec.shape, 0, nextLeaf);
  auto& gt = b.gt;

  std::size_t allocated = 0;
  for (std::size_t id = 0; id < gt.nodes.size(); ++id)
    if (!gt.nodes[id].is_leaf()) allocated += b.shapes[id]->noise;
  if (allocated > M) throw InputError("noise allocation exceeds the feature count");

  std::mt19937_64 rng(spec.seed);
  std::vector<FeatureId> perm(M);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = M - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(perm[i], perm[pick(rng)]);
  }

  std::size_t cursor = 0;
  std::vector<double> rawMass(gt.nodes.size(), 0.0);
  for (auto& n : gt.nodes) {
    if (n.is_leaf()) continue;
    std::size_t count = b.shapes[n.id]->noise;
    n.noise = FeatureSet(std::vector<FeatureId>(perm.begin() + cursor, perm.begin() + cursor + count));
    cursor += count;
    rawMass[n.id] = static_cast<double>(count) / static_cast<double>(M);
  }

  auto ancestors = [&](std::size_t id) {
    std::vector<std::size_t> out;
    for (auto p = gt.nodes[id].parent; p; p = gt.nodes[*p].parent) out.push_back(*p);
    return out;
  };

  // One global factor keeps every sharing relation exact while meeting the useful-mass floor.
  double scale = 1.0;
  for (auto l : gt.leafNodes) {
    double path = 0.0;
    for (auto a : ancestors(l)) path += rawMass[a];
    FeatureSet shared;
    for (auto a : ancestors(l)) shared = shared | gt.nodes[a].noise;
    if (shared.size() >= M) throw InputError("a leaf has no useful features left");
    if (path > 0.0) scale = std::min(scale, (1.0 - spec.minUsefulMass) / path);
  }

  for (auto& n : gt.nodes) {
    if (n.is_leaf() || n.noise.empty()) continue;
    n.blockMass = rawMass[n.id] * scale;
    auto cond = draw_simplex(n.noise.size(), rng);
    n.params.assign(M, 0.0);
    std::size_t i = 0;
    for (auto j : n.noise) n.params[j] = cond[i++];
  }

  for (auto l : gt.leafNodes) {
    auto& leaf = gt.nodes[l];
    FeatureSet shared;
    double sharedMass = 0.0;
    for (auto a : ancestors(l)) {
      shared = shared | gt.nodes[a].noise;
      sharedMass += gt.nodes[a].blockMass;
    }
    auto useful = FeatureSet::range(M) - shared;
    leaf.blockMass = 1.0 - sharedMass;
    auto own = draw_simplex(useful.size(), rng);
    leaf.params.assign(M, 0.0);
    std::size_t i = 0;
    for (auto j : useful) leaf.params[j] = leaf.blockMass * own[i++];
    for (auto a : ancestors(l)) {
      const auto& anc = gt.nodes[a];
      for (auto j : anc.noise) leaf.params[j] = anc.blockMass * anc.params[j];
    }
  }
  return gt;
}

SyntheticCorpus sample(const GroundTruth& skeleton, const StructureSpec& spec, Exec exec) {
  const std::size_t M = spec.featureCount;
  const std::size_t L = skeleton.leaf_count();
  std::vector<std::vector<std::vector<TermCount>>> rows(L);

  auto draw_leaf = [&](std::size_t l) {
    const auto& theta = skeleton.nodes[skeleton.leafNodes[l]].params;
    std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(l + 1)));
    std::discrete_distribution<FeatureId> token(theta.begin(), theta.end());
    std::vector<Count> dense(M);
    rows[l].reserve(spec.docsPerLeaf);
    for (std::size_t d = 0; d < spec.docsPerLeaf; ++d) {
      std::fill(dense.begin(), dense.end(), 0);
      for (std::size_t t = 0; t < spec.tokensPerDoc; ++t) ++dense[token(rng)];
      std::vector<TermCount> row;
      for (FeatureId j = 0; j < M; ++j)
        if (dense[j]) row.push_back({j, dense[j]});
      rows[l].push_back(std::move(row));
    }
  };

  const auto n = static_cast<std::int64_t>(L);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t l = 0; l < n; ++l) draw_leaf(static_cast<std::size_t>(l));
  } else {
    for (std::int64_t l = 0; l < n; ++l) draw_leaf(static_cast<std::size_t>(l));
  }

  SyntheticCorpus out{SparseDocMatrix(M), skeleton};
  auto& truth = out.truth;
  truth.leafLabels.clear();
  for (std::size_t l = 0; l < L; ++l)
    for (auto& row : rows[l]) {
      out.data.add_row(std::move(row));
      truth.leafLabels.push_back(static_cast<ClusterId>(l));
    }

  truth.levelLabels.clear();
  const std::size_t depth = truth.max_depth();
  for (std::size_t level = 1; level + 1 <= depth; ++level) {
    std::vector<std::optional<ClusterId>> category(truth.nodes.size());
    ClusterId next = 0;
    std::vector<ClusterId> labels;
    labels.reserve(truth.leafLabels.size());
    for (auto l : truth.leafLabels) {
      auto id = truth.leafNodes[l];
      while (truth.nodes[id].depth > level) id = *truth.nodes[id].parent;
      if (!category[id]) category[id] = next++;
      labels.push_back(*category[id]);
    }
    truth.levelLabels.push_back(std::move(labels));
  }
  return out;
}

}  // namespace mbhc
