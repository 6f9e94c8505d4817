#pragma once

#include <cstddef>
#include <span>

namespace rxsentinel::nn {

struct EarlyStopRule {
  double min_delta = 1e-4;
  std::size_t patience = 5;
};

/// True when none of the last `patience` losses improved on the best loss
/// before them by at least `min_delta`.
bool check_early_stop(const EarlyStopRule& rule, std::span<const double> loss_history);

}  // namespace rxsentinel::nn
