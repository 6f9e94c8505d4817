#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rxsentinel/eval/otsu.hpp"
#include "rxsentinel/orders.hpp"

namespace rxsentinel::eval {

inline constexpr double kTrimQuantile = 0.90;
inline constexpr std::size_t kMinCalibrationSamples = 20;

struct DepartmentThreshold {
  double threshold = 0.0;
  std::size_t samples = 0;  // before trimming
  std::size_t kept = 0;     // after trimming
};

struct CalibrationWarning {
  orders::Department department;
  std::size_t samples = 0;
  std::string reason;
};

struct ThresholdSet {
  std::map<orders::Department, DepartmentThreshold> departments;
  // Threshold over every calibration score pooled, for departments the
  // calibration never saw.
  std::optional<double> pooled;
  std::vector<CalibrationWarning> warnings;
  double trim_quantile = kTrimQuantile;
  std::size_t bins = kDefaultOtsuBins;
  std::string artifact_digest;

  const DepartmentThreshold* find(orders::Department d) const;
};

using DepartmentScore = std::pair<orders::Department, double>;

/// Nearest-rank quantile: the ceil(q * n)-th smallest value.
double nearest_rank(std::span<const double> values, double q);

/// Values at or below the nearest-rank `q` quantile.
std::vector<double> trim_above_quantile(std::span<const double> values, double q);

/// Per department: drop scores above its 90th percentile, then Otsu on the
/// rest. Departments with fewer than `min_samples` scores, or whose trimmed
/// scores are all equal, are left out and recorded as warnings.
ThresholdSet calibrate_thresholds(std::span<const DepartmentScore> scores,
                                  std::size_t bins = kDefaultOtsuBins,
                                  double trim_quantile = kTrimQuantile,
                                  std::size_t min_samples = kMinCalibrationSamples);

/// Atypical iff score > threshold of `dept`. Throws ClassificationError when
/// `dept` has no threshold.
orders::Label classify_profile(double score, orders::Department dept, const ThresholdSet& t);

/// As classify_profile, but falls back to the pooled threshold. Throws
/// ClassificationError when neither exists.
orders::Label classify_with_fallback(double score, orders::Department dept,
                                     const ThresholdSet& t);

nlohmann::ordered_json thresholds_to_json(const ThresholdSet& t);
ThresholdSet thresholds_from_json(const nlohmann::json& j);
void write_thresholds_file(const std::string& path, const ThresholdSet& t);
ThresholdSet read_thresholds_file(const std::string& path);

}  // namespace rxsentinel::eval
