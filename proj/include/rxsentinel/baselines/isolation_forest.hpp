#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rxsentinel/binary_io.hpp"
#include "rxsentinel/nn/matrix.hpp"
#include "rxsentinel/orders.hpp"

namespace rxsentinel::baselines {

struct IsolationTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double split = 0.0;         // left: x[feature] < split
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t size = 0;     // training points that reached the node
  };
  std::vector<Node> nodes;  // nodes[0] is the root

  /// Depth of the terminating leaf plus c(size) of that leaf.
  double path_length(std::span<const double> x) const;
};

struct IsolationForestParams {
  std::size_t tree_count = 100;
  std::size_t subsample = 256;
  double contamination = 0.20;
  std::uint64_t seed = 11;
};

struct IsolationForest {
  std::vector<IsolationTree> trees;
  std::size_t subsample = 0;
  std::size_t features = 0;
  double contamination = 0.20;
  double score_threshold = 0.0;

  /// s(x) = 2^(-E[h(x)] / c(subsample)).
  double score(std::span<const double> x) const;
  double mean_path_length(std::span<const double> x) const;
};

/// Average unsuccessful-search path length of a binary search tree on n
/// points: 2 H(n-1) - 2 (n-1) / n with H(i) ~ ln(i) + Euler's constant,
/// c(1) = 0 and c(2) = 1.
double average_path_length(std::size_t n);

/// Anomaly score for a mean path length `h` under subsample size psi.
double isolation_score(double h, std::size_t psi);

/// Trees grow to ceil(log2 psi) or until a node holds one point or no feature
/// varies. The threshold is the (1 - contamination) quantile of training
/// scores. Throws ConfigError when psi < 2, psi > rows or contamination is
/// outside [0, 1).
IsolationForest iforest_fit(const nn::Matrix& embeddings, const IsolationForestParams& params);

struct IsolationResult {
  orders::Label label = orders::Label::typical;
  double score = 0.0;
};

/// Atypical iff score > threshold.
IsolationResult iforest_classify(const IsolationForest& forest, std::span<const double> x);

void write_forest(ByteWriter& out, const IsolationForest& forest);
IsolationForest read_forest(ByteReader& in);

}  // namespace rxsentinel::baselines
