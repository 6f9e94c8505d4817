#pragma once

#include <cstddef>
#include <span>

namespace rxsentinel::eval {

inline constexpr std::size_t kDefaultOtsuBins = 256;

/// Histograms `values` into `bins` equal-width bins over [min, max] and
/// returns the interior bin edge that maximizes the between-class variance.
/// Ties resolve to the lowest edge. Throws DegenerateError when fewer than
/// two distinct values are given and ConfigError for non-finite input or
/// fewer than two bins.
double otsu_threshold(std::span<const double> values, std::size_t bins = kDefaultOtsuBins);

/// Bin index of `v` in the equal-width histogram over [lo, hi].
std::size_t otsu_bin(double v, double lo, double hi, std::size_t bins);

}  // namespace rxsentinel::eval
