#include "rxsentinel/detectors/training.hpp"

#include <span>

namespace rxsentinel::detectors {

std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size,
                                                       Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += batch_size) {
    const std::size_t end = std::min(n, i + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

nn::Matrix gather_rows(const nn::Matrix& x, const std::vector<std::size_t>& rows) {
  nn::Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

double mean_column_variance(const nn::Matrix& x) {
  if (x.rows() < 2 || x.cols() == 0) return 0.0;
  const nn::Row mean = x.colwise().mean();
  const double n = static_cast<double>(x.rows());
  return ((x.rowwise() - mean).array().square().colwise().sum() / n).mean();
}

}  // namespace rxsentinel::detectors
