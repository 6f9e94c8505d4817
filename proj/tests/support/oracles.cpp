#include "oracles.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <unistd.h>

namespace oracle {

std::vector<double> jacobi_singular_values(const Matrix& a) {
  // Work on the taller orientation so there are min(rows, cols) columns.
  const bool transpose = a.rows() < a.cols();
  const long m = transpose ? a.cols() : a.rows();
  const long n = transpose ? a.rows() : a.cols();
  std::vector<std::vector<long double>> col(n, std::vector<long double>(m));
  for (long j = 0; j < n; ++j) {
    for (long i = 0; i < m; ++i) col[j][i] = transpose ? a(j, i) : a(i, j);
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (long p = 0; p + 1 < n; ++p) {
      for (long q = p + 1; q < n; ++q) {
        long double alpha = 0, beta = 0, gamma = 0;
        for (long i = 0; i < m; ++i) {
          alpha += col[p][i] * col[p][i];
          beta += col[q][i] * col[q][i];
          gamma += col[p][i] * col[q][i];
        }
        if (gamma == 0 || std::fabs(gamma) <= 1e-15L * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const long double zeta = (beta - alpha) / (2 * gamma);
        const long double t =
            (zeta >= 0 ? 1.0L : -1.0L) / (std::fabs(zeta) + std::sqrt(1 + zeta * zeta));
        const long double c = 1 / std::sqrt(1 + t * t);
        const long double s = c * t;
        for (long i = 0; i < m; ++i) {
          const long double x = col[p][i];
          const long double y = col[q][i];
          col[p][i] = c * x - s * y;
          col[q][i] = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv;
  for (long j = 0; j < n; ++j) {
    long double norm = 0;
    for (long i = 0; i < m; ++i) norm += col[j][i] * col[j][i];
    sv.push_back(static_cast<double>(std::sqrt(norm)));
  }
  std::sort(sv.rbegin(), sv.rend());
  return sv;
}

namespace {

__extension__ typedef __int128 i128;

// Exact fraction with a positive denominator.
struct Fraction {
  i128 num;
  i128 den;
};

bool less(const Fraction& a, const Fraction& b) { return a.num * b.den < b.num * a.den; }

}  // namespace

double brute_force_otsu(std::span<const double> values, std::size_t bins) {
  double lo = values[0];
  double hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<long long> hist(bins, 0);
  for (double v : values) {
    const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
    std::size_t b = pos <= 0 ? 0 : static_cast<std::size_t>(pos);
    if (b >= bins) b = bins - 1;
    ++hist[b];
  }
  // Bin b has center lo + (b + 1/2) * width; measured in half-widths from lo
  // the centers are the odd integers 2b + 1, and the common scale factor
  // does not move the argmax.
  const long long total = static_cast<long long>(values.size());
  bool have = false;
  Fraction best{0, 1};
  std::size_t best_edge = 0;
  for (std::size_t edge = 1; edge < bins; ++edge) {
    long long c0 = 0, c1 = 0, m0 = 0, m1 = 0;
    for (std::size_t b = 0; b < bins; ++b) {
      const long long center = 2 * static_cast<long long>(b) + 1;
      if (b < edge) {
        c0 += hist[b];
        m0 += hist[b] * center;
      } else {
        c1 += hist[b];
        m1 += hist[b] * center;
      }
    }
    if (c0 == 0 || c1 == 0) continue;
    // w0 w1 (mu0 - mu1)^2 = (c0 c1 / N^2) (m0/c0 - m1/c1)^2
    //                     = (m0 c1 - m1 c0)^2 / (N^2 c0 c1)
    const i128 d = static_cast<i128>(m0) * c1 - static_cast<i128>(m1) * c0;
    const Fraction sigma{d * d, static_cast<i128>(total) * total * c0 * c1};
    if (!have || less(best, sigma)) {
      best = sigma;
      best_edge = edge;
      have = true;
    }
  }
  if (!have) throw std::runtime_error("brute_force_otsu: no separating edge");
  return lo + static_cast<double>(best_edge) * ((hi - lo) / static_cast<double>(bins));
}

GradientCheck check_gradient(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x, std::span<const double> analytic, double h,
                             double floor) {
  if (analytic.size() != x.size()) throw std::runtime_error("check_gradient: size mismatch");
  GradientCheck out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max(std::fabs(numeric) + std::fabs(analytic[i]), floor);
    out.max_rel_error = std::max(out.max_rel_error, std::fabs(numeric - analytic[i]) / denom);
    ++out.checked;
  }
  return out;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, rxsentinel::Rng& rng, double scale) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * rng.uniform(-1.0, 1.0);
  }
  return m;
}

double average_precision_by_rank(std::span<const double> scores, std::span<const bool> truth) {
  std::size_t positives = 0;
  for (bool t : truth) positives += t ? 1 : 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!truth[i]) continue;
    std::size_t at_least = 0;
    std::size_t hits = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] >= scores[i]) {
        ++at_least;
        hits += truth[j] ? 1 : 0;
      }
    }
    sum += static_cast<double>(hits) / static_cast<double>(at_least);
  }
  return sum / static_cast<double>(positives);
}

std::string temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  const auto path = std::filesystem::temp_directory_path() /
                    ("rxs-" + tag + "-" + std::to_string(::getpid()) + "-" +
                     std::to_string(stamp) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
  return path.string();
}

std::vector<rxsentinel::orders::Hospitalization> random_hospitalizations(
    std::size_t count, int first_year, int last_year, rxsentinel::Rng& rng) {
  using rxsentinel::Date;
  using rxsentinel::orders::Hospitalization;
  const Date start(first_year, 1, 1);
  const long span = start.days_until(Date(last_year, 12, 31)) + 1;
  std::vector<Hospitalization> out;
  for (std::size_t i = 0; i < count; ++i) {
    Hospitalization h;
    h.id = "H" + std::to_string(i);
    h.patient_id = "P" + std::to_string(rng.below(count / 2 + 1));
    h.department =
        rxsentinel::orders::kAllDepartments[rng.below(rxsentinel::orders::kAllDepartments.size())];
    h.admission_date = start.plus_days(static_cast<long>(rng.below(static_cast<std::uint64_t>(span))));
    out.push_back(h);
  }
  return out;
}

std::vector<double> random_otsu_sample(rxsentinel::Rng& rng) {
  const std::size_t n = 2 + rng.below(400);
  std::vector<double> v;
  v.reserve(n);
  switch (rng.below(4)) {
    case 0:  // uniform
      for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform(-3.0, 5.0));
      break;
    case 1: {  // two-component Gaussian mixture
      const double a = rng.uniform(0.0, 1.0);
      const double b = a + rng.uniform(0.5, 4.0);
      const double w = rng.uniform(0.1, 0.9);
      for (std::size_t i = 0; i < n; ++i) v.push_back((rng.bernoulli(w) ? a : b) + 0.3 * rng.normal());
      break;
    }
    case 2:  // few distinct values, so many ties
      for (std::size_t i = 0; i < n; ++i) v.push_back(static_cast<double>(rng.below(5)) * 0.25);
      break;
    default:  // long right tail
      for (std::size_t i = 0; i < n; ++i) v.push_back(std::exp(rng.normal()));
      break;
  }
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) v.push_back(v[0] + 1.0);
  return v;
}

}  // namespace oracle
