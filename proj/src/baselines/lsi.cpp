#include "rxsentinel/baselines/lsi.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "rxsentinel/errors.hpp"
#include "rxsentinel/random.hpp"

namespace rxsentinel::baselines {

namespace {

using Dense = Eigen::MatrixXd;

Dense orthonormalize(const Dense& y) {
  Eigen::HouseholderQR<Dense> qr(y);
  return qr.householderQ() * Dense::Identity(y.rows(), y.cols());
}

bool converged(const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, std::size_t k,
               double tol) {
  if (prev.size() != cur.size()) return false;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    const double scale = std::max(std::abs(cur(j)), 1e-300);
    if (std::abs(cur(j) - prev(j)) > tol * scale) return false;
  }
  return true;
}

template <typename A>
LsiFit fit_impl(const A& counts, double frobenius_sq, std::size_t k, const LsiOptions& opts) {
  const auto n = static_cast<std::size_t>(counts.rows());
  const auto v = static_cast<std::size_t>(counts.cols());
  const std::size_t rank_bound = std::min(n, v);
  if (k < 1 || k > rank_bound) {
    throw ConfigError("lsi: k = " + std::to_string(k) + " outside [1, " +
                      std::to_string(rank_bound) + "]");
  }
  // Hard spectra need oversampling on the order of k; once the sketch
  // reaches full rank the factorization is exact.
  const std::size_t width =
      std::min(std::max(k + opts.oversample, 2 * k), rank_bound);
  const auto l = static_cast<Eigen::Index>(width);

  Rng rng(opts.seed);
  Dense omega(static_cast<Eigen::Index>(v), l);
  for (Eigen::Index j = 0; j < omega.cols(); ++j) {
    for (Eigen::Index i = 0; i < omega.rows(); ++i) omega(i, j) = rng.normal();
  }
  Dense q = orthonormalize(Dense(counts * omega));

  Eigen::VectorXd previous;
  for (std::size_t it = 1; it <= opts.max_power_iterations; ++it) {
    const Dense z = orthonormalize(Dense(counts.transpose() * q));
    q = orthonormalize(Dense(counts * z));
    if (it >= opts.min_power_iterations) {
      const Dense b = (counts.transpose() * q).transpose();
      Eigen::BDCSVD<Dense> probe(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
      Eigen::VectorXd sv = probe.singularValues();
      if (converged(previous, sv, k, opts.tolerance)) {
        // Singular values settle before the vectors do; also require the
        // top-k factor to reproduce counts * V.
        const auto kk = static_cast<Eigen::Index>(k);
        const Dense v_k = probe.matrixV().leftCols(kk);
        const Dense factor = q * probe.matrixU().leftCols(kk) * sv.head(kk).asDiagonal();
        const double residual = (Dense(counts * v_k) - factor).cwiseAbs().maxCoeff();
        if (residual <= opts.residual_tolerance * std::max(sv(0), 1e-300)) break;
      }
      previous = std::move(sv);
    }
  }

  const Dense b = (counts.transpose() * q).transpose();  // l x V
  Eigen::BDCSVD<Dense> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto kk = static_cast<Eigen::Index>(k);

  LsiFit fit;
  LsiBasis& basis = fit.basis;
  basis.k = k;
  basis.basis = svd.matrixV().leftCols(kk);
  for (Eigen::Index i = 0; i < kk; ++i) {
    const double s = svd.singularValues()(i);
    basis.singular_values.push_back(s);
    basis.explained_variance_ratio.push_back(frobenius_sq > 0.0 ? s * s / frobenius_sq : 0.0);
  }
  const Dense u = q * svd.matrixU().leftCols(kk);
  fit.training_embedding = u * svd.singularValues().head(kk).asDiagonal();
  return fit;
}

}  // namespace

SparseRows count_matrix(std::span<const orders::PharmacologicalProfile> profiles,
                        const orders::Vocabulary& vocab) {
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t r = 0; r < profiles.size(); ++r) {
    for (const auto& d : profiles[r].drugs) {
      if (auto idx = vocab.index_of(d)) {
        entries.emplace_back(static_cast<int>(r), static_cast<int>(*idx), 1.0);
      }
    }
  }
  SparseRows m(static_cast<Eigen::Index>(profiles.size()),
               static_cast<Eigen::Index>(vocab.size()));
  // Profiles are sets, so duplicates only arise from repeated drug ids;
  // keep the entries 0/1.
  m.setFromTriplets(entries.begin(), entries.end(), [](double a, double) { return a; });
  return m;
}

LsiFit lsi_fit_matrix(const SparseRows& counts, std::size_t k, const LsiOptions& opts) {
  return fit_impl(counts, counts.squaredNorm(), k, opts);
}

LsiFit lsi_fit_matrix(const nn::Matrix& counts, std::size_t k, const LsiOptions& opts) {
  const Dense a = counts;
  return fit_impl(a, a.squaredNorm(), k, opts);
}

LsiBasis lsi_fit(std::span<const orders::PharmacologicalProfile> profiles,
                 const orders::Vocabulary& vocab, std::size_t k, const LsiOptions& opts) {
  if (profiles.empty()) throw EmptyCorpusError("lsi: no profiles");
  return lsi_fit_matrix(count_matrix(profiles, vocab), k, opts).basis;
}

std::vector<double> lsi_transform(const LsiBasis& basis, std::span<const double> counts) {
  if (counts.size() != static_cast<std::size_t>(basis.basis.rows())) {
    throw DimensionError("lsi_transform: count vector length does not match vocabulary");
  }
  const Eigen::Map<const Eigen::RowVectorXd> row(counts.data(),
                                                 static_cast<Eigen::Index>(counts.size()));
  const Eigen::RowVectorXd out = row * basis.basis;
  return {out.data(), out.data() + out.size()};
}

std::vector<double> lsi_transform(const LsiBasis& basis,
                                  const orders::PharmacologicalProfile& profile,
                                  const orders::Vocabulary& vocab) {
  std::vector<double> out(basis.k, 0.0);
  for (const auto& d : profile.drugs) {
    if (auto idx = vocab.index_of(d)) {
      const auto r = static_cast<Eigen::Index>(*idx);
      for (std::size_t j = 0; j < basis.k; ++j) {
        out[j] += basis.basis(r, static_cast<Eigen::Index>(j));
      }
    }
  }
  return out;
}

nn::Matrix lsi_transform_all(const LsiBasis& basis, const SparseRows& counts) {
  if (counts.cols() != basis.basis.rows()) {
    throw DimensionError("lsi_transform_all: vocabulary width mismatch");
  }
  return counts * basis.basis;
}

void write_lsi(ByteWriter& out, const LsiBasis& basis) {
  out.u64(basis.k);
  out.u64(static_cast<std::uint64_t>(basis.basis.rows()));
  out.f64s({basis.basis.data(), static_cast<std::size_t>(basis.basis.size())});
  out.f64s(basis.singular_values);
  out.f64s(basis.explained_variance_ratio);
}

LsiBasis read_lsi(ByteReader& in) {
  LsiBasis b;
  b.k = in.u64();
  const std::uint64_t rows = in.u64();
  if (b.k == 0 || rows == 0 || b.k * rows > in.remaining() / 8) {
    throw FormatError("implausible lsi basis shape");
  }
  b.basis.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(b.k));
  in.f64s({b.basis.data(), static_cast<std::size_t>(b.basis.size())});
  b.singular_values.resize(b.k);
  in.f64s(b.singular_values);
  b.explained_variance_ratio.resize(b.k);
  in.f64s(b.explained_variance_ratio);
  return b;
}

}  // namespace rxsentinel::baselines
