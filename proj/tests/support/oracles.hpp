#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rxsentinel/nn/matrix.hpp"
#include "rxsentinel/orders.hpp"
#include "rxsentinel/random.hpp"

namespace oracle {

using rxsentinel::nn::Matrix;

/// Singular values of `a`, descending, by one-sided Jacobi rotations in
/// long double until every column pair is orthogonal to 1e-15.
std::vector<double> jacobi_singular_values(const Matrix& a);

/// Exhaustive Otsu: evaluates w0 * w1 * (mu0 - mu1)^2 with bin-center means
/// as exact fractions at every interior edge and returns the first maximizer
/// as lo + j * (hi - lo) / bins.
double brute_force_otsu(std::span<const double> values, std::size_t bins);

/// Largest relative error between an analytic gradient and central
/// differences of `f` at `x`, with |a - n| / max(|a| + |n|, floor).
struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};
GradientCheck check_gradient(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x, std::span<const double> analytic,
                             double h = 1e-5, double floor = 1e-7);

/// Random sample with at least two distinct values, drawn from a mix of
/// uniform, bimodal, heavily tied and long-tailed shapes.
std::vector<double> random_otsu_sample(rxsentinel::Rng& rng);

Matrix random_matrix(std::size_t rows, std::size_t cols, rxsentinel::Rng& rng, double scale = 1.0);

/// Area under the PR curve computed directly from its definition: for each
/// positive, the precision among all items scoring at least as high.
double average_precision_by_rank(std::span<const double> scores, std::span<const bool> truth);

/// Fresh empty directory under the system temp path.
std::string temp_dir(const std::string& tag);

/// Hospitalizations with admission dates across [first_year, last_year].
std::vector<rxsentinel::orders::Hospitalization> random_hospitalizations(
    std::size_t count, int first_year, int last_year, rxsentinel::Rng& rng);

}  // namespace oracle
