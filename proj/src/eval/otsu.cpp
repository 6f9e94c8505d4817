#include "rxsentinel/eval/otsu.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rxsentinel/errors.hpp"

namespace rxsentinel::eval {

namespace {

__extension__ typedef unsigned __int128 u128;

struct U256 {
  u128 hi = 0;
  u128 lo = 0;
};

U256 mul(u128 a, u128 b) {
  const u128 mask = ~static_cast<std::uint64_t>(0);
  const u128 a0 = a & mask, a1 = a >> 64, b0 = b & mask, b1 = b >> 64;
  const u128 p00 = a0 * b0, p01 = a0 * b1, p10 = a1 * b0, p11 = a1 * b1;
  const u128 mid = (p00 >> 64) + (p01 & mask) + (p10 & mask);
  U256 r;
  r.lo = (p00 & mask) | (mid << 64);
  r.hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
  return r;
}

bool greater(const U256& a, const U256& b) { return a.hi != b.hi ? a.hi > b.hi : a.lo > b.lo; }

// Between-class variance up to a common positive factor, kept as the exact
// fraction diff^2 / (n0 * n1).
struct Separation {
  u128 num = 0;
  u128 den = 0;
};

bool exceeds(const Separation& a, const Separation& b) {
  return greater(mul(a.num, b.den), mul(b.num, a.den));
}

}  // namespace

std::size_t otsu_bin(double v, double lo, double hi, std::size_t bins) {
  const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
  if (!(pos > 0.0)) return 0;
  return std::min(bins - 1, static_cast<std::size_t>(pos));
}

double otsu_threshold(std::span<const double> values, std::size_t bins) {
  if (bins < 2) throw ConfigError("otsu: at least two bins are required");
  if (values.empty()) throw DegenerateError("otsu: no values");
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("otsu: non-finite value");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw DegenerateError("otsu: all values are identical");

  std::vector<std::int64_t> counts(bins, 0);
  for (double v : values) ++counts[otsu_bin(v, lo, hi, bins)];

  std::int64_t n_total = 0;
  std::int64_t s_total = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    n_total += counts[b];
    s_total += counts[b] * static_cast<std::int64_t>(b);
  }

  // Bin indices stand in for bin centers: the map is affine, so the argmax
  // over edges is unchanged. Comparisons are exact so ties resolve by edge.
  std::int64_t n0 = 0;
  std::int64_t s0 = 0;
  Separation best{0, 1};
  bool found = false;
  std::size_t best_edge = 0;
  for (std::size_t j = 1; j < bins; ++j) {
    n0 += counts[j - 1];
    s0 += counts[j - 1] * static_cast<std::int64_t>(j - 1);
    const std::int64_t n1 = n_total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const std::int64_t s1 = s_total - s0;
    __extension__ const __int128 diff =
        static_cast<__int128>(n1) * s0 - static_cast<__int128>(n0) * s1;
    const u128 mag = static_cast<u128>(diff < 0 ? -diff : diff);
    const Separation sigma{mag * mag, static_cast<u128>(n0) * static_cast<u128>(n1)};
    if (!found || exceeds(sigma, best)) {
      best = sigma;
      best_edge = j;
      found = true;
    }
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  return lo + static_cast<double>(best_edge) * width;
}

}  // namespace rxsentinel::eval
