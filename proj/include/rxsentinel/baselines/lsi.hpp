#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "rxsentinel/binary_io.hpp"
#include "rxsentinel/nn/matrix.hpp"
#include "rxsentinel/orders.hpp"

namespace rxsentinel::baselines {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Truncated SVD of the profile-by-drug count matrix.
struct LsiBasis {
  std::size_t k = 0;
  nn::Matrix basis;                  // V x k, orthonormal columns
  std::vector<double> singular_values;  // non-increasing
  std::vector<double> explained_variance_ratio;  // sigma_i^2 / ||A||_F^2
};

struct LsiOptions {
  std::uint64_t seed = 7;
  std::size_t oversample = 10;
  std::size_t min_power_iterations = 2;
  std::size_t max_power_iterations = 200;
  // Subspace iteration stops once the top-k singular values move less than
  // this (relative) between iterations.
  double tolerance = 1e-13;
  // ... and once the fitted factor U * Sigma matches counts * V to this
  // fraction of the top singular value.
  double residual_tolerance = 1e-11;
};

struct LsiFit {
  LsiBasis basis;
  nn::Matrix training_embedding;  // n x k, U * Sigma of the factorization
};

/// 0/1 count rows over `vocab`; drugs outside it are dropped.
SparseRows count_matrix(std::span<const orders::PharmacologicalProfile> profiles,
                        const orders::Vocabulary& vocab);

/// Seeded randomized range finder with power iterations. Throws ConfigError
/// unless 1 <= k <= min(rows, cols).
LsiFit lsi_fit_matrix(const SparseRows& counts, std::size_t k, const LsiOptions& opts = {});
LsiFit lsi_fit_matrix(const nn::Matrix& counts, std::size_t k, const LsiOptions& opts = {});

LsiBasis lsi_fit(std::span<const orders::PharmacologicalProfile> profiles,
                 const orders::Vocabulary& vocab, std::size_t k, const LsiOptions& opts = {});

/// Row vector of counts (length V) times the basis.
std::vector<double> lsi_transform(const LsiBasis& basis, std::span<const double> counts);
std::vector<double> lsi_transform(const LsiBasis& basis,
                                  const orders::PharmacologicalProfile& profile,
                                  const orders::Vocabulary& vocab);
nn::Matrix lsi_transform_all(const LsiBasis& basis, const SparseRows& counts);

void write_lsi(ByteWriter& out, const LsiBasis& basis);
LsiBasis read_lsi(ByteReader& in);

}  // namespace rxsentinel::baselines
