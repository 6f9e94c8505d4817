#include "rxsentinel/nn/early_stop.hpp"

#include <algorithm>

namespace rxsentinel::nn {

bool check_early_stop(const EarlyStopRule& rule, std::span<const double> loss_history) {
  if (rule.patience == 0) return !loss_history.empty();
  if (loss_history.size() <= rule.patience) return false;
  const auto window_begin = loss_history.end() - static_cast<std::ptrdiff_t>(rule.patience);
  const double best_before = *std::min_element(loss_history.begin(), window_begin);
  const double best_recent = *std::min_element(window_begin, loss_history.end());
  return best_recent > best_before - rule.min_delta;
}

}  // namespace rxsentinel::nn
