#include "rxsentinel/baselines/isolation_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rxsentinel/errors.hpp"
#include "rxsentinel/random.hpp"

namespace rxsentinel::baselines {

namespace {

constexpr double kEulerGamma = 0.5772156649015329;

class TreeBuilder {
 public:
  TreeBuilder(const nn::Matrix& data, std::size_t max_depth, Rng& rng)
      : data_(data), max_depth_(max_depth), rng_(rng) {}

  IsolationTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].size = static_cast<std::uint32_t>(rows.size());
    if (rows.size() <= 1 || depth >= max_depth_) return id;

    // Candidate features: those not constant over this node.
    std::vector<std::int32_t> varying;
    std::vector<std::pair<double, double>> ranges;
    for (Eigen::Index f = 0; f < data_.cols(); ++f) {
      double lo = data_(static_cast<Eigen::Index>(rows[0]), f);
      double hi = lo;
      for (std::size_t r : rows) {
        const double v = data_(static_cast<Eigen::Index>(r), f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi > lo) {
        varying.push_back(static_cast<std::int32_t>(f));
        ranges.emplace_back(lo, hi);
      }
    }
    if (varying.empty()) return id;

    const std::size_t pick = rng_.below(varying.size());
    const std::int32_t feature = varying[pick];
    const auto [lo, hi] = ranges[pick];
    double split = rng_.uniform(lo, hi);
    while (split <= lo) split = rng_.uniform(lo, hi);

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (data_(static_cast<Eigen::Index>(r), feature) < split ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const std::int32_t l = grow(left, depth + 1);
    const std::int32_t rr = grow(right, depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = feature;
    node.split = split;
    node.left = l;
    node.right = rr;
    return id;
  }

  const nn::Matrix& data_;
  std::size_t max_depth_;
  Rng& rng_;
  IsolationTree tree_;
};

}  // namespace

double average_path_length(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  const double m = static_cast<double>(n - 1);
  const double harmonic = std::log(m) + kEulerGamma;
  return 2.0 * harmonic - 2.0 * m / static_cast<double>(n);
}

double isolation_score(double h, std::size_t psi) {
  return std::exp2(-h / average_path_length(psi));
}

double IsolationTree::path_length(std::span<const double> x) const {
  std::size_t depth = 0;
  std::int32_t at = 0;
  for (;;) {
    const Node& n = nodes[static_cast<std::size_t>(at)];
    if (n.feature < 0) return static_cast<double>(depth) + average_path_length(n.size);
    at = x[static_cast<std::size_t>(n.feature)] < n.split ? n.left : n.right;
    ++depth;
  }
}

double IsolationForest::mean_path_length(std::span<const double> x) const {
  if (x.size() != features) throw DimensionError("isolation forest: feature count mismatch");
  double total = 0.0;
  for (const auto& t : trees) total += t.path_length(x);
  return total / static_cast<double>(trees.size());
}

double IsolationForest::score(std::span<const double> x) const {
  return isolation_score(mean_path_length(x), subsample);
}

IsolationForest iforest_fit(const nn::Matrix& embeddings, const IsolationForestParams& params) {
  const auto n = static_cast<std::size_t>(embeddings.rows());
  if (params.subsample < 2) throw ConfigError("isolation forest: subsample must be >= 2");
  if (params.subsample > n) {
    throw ConfigError("isolation forest: subsample " + std::to_string(params.subsample) +
                      " exceeds " + std::to_string(n) + " training rows");
  }
  if (params.tree_count == 0) throw ConfigError("isolation forest: tree_count must be positive");
  if (!(params.contamination >= 0.0 && params.contamination < 1.0)) {
    throw ConfigError("isolation forest: contamination must lie in [0, 1)");
  }
  if (embeddings.cols() == 0) throw DimensionError("isolation forest: no features");

  IsolationForest forest;
  forest.subsample = params.subsample;
  forest.features = static_cast<std::size_t>(embeddings.cols());
  forest.contamination = params.contamination;
  const auto max_depth = static_cast<std::size_t>(
      std::ceil(std::log2(static_cast<double>(params.subsample))));

  Rng rng(params.seed);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  TreeBuilder builder(embeddings, max_depth, rng);
  for (std::size_t t = 0; t < params.tree_count; ++t) {
    // Partial Fisher-Yates: the first `subsample` slots become the sample.
    for (std::size_t i = 0; i < params.subsample; ++i) {
      std::swap(all[i], all[i + rng.below(n - i)]);
    }
    forest.trees.push_back(
        builder.build(std::vector<std::size_t>(all.begin(), all.begin() + params.subsample)));
  }

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = embeddings.row(static_cast<Eigen::Index>(i));
    scores[i] = forest.score({row.data(), forest.features});
  }
  std::sort(scores.begin(), scores.end());
  const auto target = static_cast<std::ptrdiff_t>(
      std::llround(params.contamination * static_cast<double>(n)));
  // Among distinct training scores, pick the cut whose strict exceedance
  // count is closest to the target; duplicate profiles make ties common.
  forest.score_threshold = scores.back();
  std::ptrdiff_t best_gap = target;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[j] == scores[i]) ++j;
    const auto above = static_cast<std::ptrdiff_t>(n - j);
    const std::ptrdiff_t gap = above > target ? above - target : target - above;
    if (gap < best_gap || (gap == best_gap && above >= target)) {
      best_gap = gap;
      forest.score_threshold = scores[i];
    }
    i = j;
  }
  return forest;
}

IsolationResult iforest_classify(const IsolationForest& forest, std::span<const double> x) {
  IsolationResult r;
  r.score = forest.score(x);
  r.label = r.score > forest.score_threshold ? orders::Label::atypical : orders::Label::typical;
  return r;
}

void write_forest(ByteWriter& out, const IsolationForest& forest) {
  out.u64(forest.subsample);
  out.u64(forest.features);
  out.f64(forest.contamination);
  out.f64(forest.score_threshold);
  out.u64(forest.trees.size());
  for (const auto& t : forest.trees) {
    out.u64(t.nodes.size());
    for (const auto& n : t.nodes) {
      out.u32(static_cast<std::uint32_t>(n.feature));
      out.f64(n.split);
      out.u32(static_cast<std::uint32_t>(n.left));
      out.u32(static_cast<std::uint32_t>(n.right));
      out.u32(n.size);
    }
  }
}

IsolationForest read_forest(ByteReader& in) {
  IsolationForest f;
  f.subsample = in.u64();
  f.features = in.u64();
  f.contamination = in.f64();
  f.score_threshold = in.f64();
  const std::uint64_t trees = in.u64();
  if (f.subsample < 2 || trees == 0 || trees > in.remaining()) {
    throw FormatError("implausible isolation forest header");
  }
  f.trees.resize(trees);
  for (auto& t : f.trees) {
    const std::uint64_t nodes = in.u64();
    if (nodes == 0 || nodes > in.remaining() / 24) throw FormatError("implausible tree size");
    t.nodes.resize(nodes);
    for (auto& n : t.nodes) {
      n.feature = static_cast<std::int32_t>(in.u32());
      n.split = in.f64();
      n.left = static_cast<std::int32_t>(in.u32());
      n.right = static_cast<std::int32_t>(in.u32());
      n.size = in.u32();
      const auto limit = static_cast<std::int64_t>(nodes);
      if (n.feature >= static_cast<std::int64_t>(f.features) ||
          (n.feature >= 0 && (n.left <= 0 || n.right <= 0 || n.left >= limit || n.right >= limit))) {
        throw FormatError("corrupt isolation tree node");
      }
    }
  }
  return f;
}

}  // namespace rxsentinel::baselines
