#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rxsentinel::eval {

/// Positive class is atypical.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  void add(bool predicted, bool truth);
  bool operator==(const ConfusionMatrix&) const = default;
};

/// A metric is empty when its denominator is zero.
struct Metrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> specificity;
  std::optional<double> npv;
  std::optional<double> f1;
};

Metrics metrics(const ConfusionMatrix& cm);

struct ScoredTruth {
  double score = 0.0;
  bool truth = false;
};

struct PrPoint {
  double threshold = 0.0;  // scores >= threshold are predicted positive
  double recall = 0.0;
  double precision = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // one per distinct score, descending
  double aupr = 0.0;
  std::size_t positives = 0;
  std::size_t total = 0;
};

/// Sweeps every distinct score from high to low, tied scores as one step,
/// and sums precision times the recall gained at each step. Throws
/// DegenerateError without positives and ConfigError for NaN scores.
PrCurve pr_curve(std::span<const ScoredTruth> scored);

nlohmann::ordered_json confusion_to_json(const ConfusionMatrix& cm);
nlohmann::ordered_json metrics_to_json(const Metrics& m);
/// recall,precision rows with a header line.
std::string pr_curve_csv(const PrCurve& c);
/// One JSON record per curve point.
std::string pr_curve_jsonl(const PrCurve& c);

}  // namespace rxsentinel::eval
