#pragma once

#include <cstddef>
#include <vector>

#include "rxsentinel/nn/matrix.hpp"
#include "rxsentinel/random.hpp"

namespace rxsentinel::detectors {

/// Shuffled partition of [0, n) into batches of `batch_size` (last may be short).
std::vector<std::vector<std::size_t>> shuffled_batches(std::size_t n, std::size_t batch_size,
                                                       Rng& rng);

nn::Matrix gather_rows(const nn::Matrix& x, const std::vector<std::size_t>& rows);

/// Mean over columns of the per-column variance across rows.
double mean_column_variance(const nn::Matrix& x);

}  // namespace rxsentinel::detectors
