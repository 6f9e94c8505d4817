#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rxsentinel/date.hpp"
#include "rxsentinel/eval/metrics.hpp"
#include "rxsentinel/eval/thresholds.hpp"
#include "rxsentinel/orders.hpp"
#include "rxsentinel/service/artifact.hpp"
#include "rxsentinel/service/score_file.hpp"

namespace rxsentinel::service {

inline constexpr int kDefaultWindowYears = 10;
inline constexpr std::size_t kIforestComponents = 512;

struct TrainOptions {
  ModelKind kind = ModelKind::frequency;
  Date as_of;
  int window_years = kDefaultWindowYears;
  std::uint64_t seed = 1;
  std::optional<std::size_t> epochs;  // neural models; defaults 11 and 21
  std::size_t iforest_components = kIforestComponents;
};

/// Trains on profiles whose hospitalization year lies in
/// [as_of year - window, as_of year). Throws ConfigError when the log has no
/// hospitalization in some year of the window, listing the years it covers.
Artifact train_artifact(const orders::OrderLog& log, const TrainOptions& opts);

/// Fits a model of `opts.kind` to already selected profiles.
Artifact fit_artifact(std::span<const orders::PharmacologicalProfile> profiles,
                      const TrainOptions& opts, int first_year, int last_year);

/// Reads an order log, trains, writes the artifact and returns its digest.
std::string cli_train(const std::string& data_path, const std::string& out_path,
                      const TrainOptions& opts);

struct RetrainOutput {
  std::string month;  // YYYY-MM
  std::string path;
  std::string digest;
};

/// One artifact per month starting at `start_month` (YYYY-MM), each trained
/// as of the first day of its month, written as <out_dir>/<kind>-<YYYY-MM>.rxsa.
std::vector<RetrainOutput> cli_retrain_schedule(const std::string& data_path,
                                                const std::string& out_dir,
                                                const std::string& start_month, int months,
                                                const TrainOptions& opts);

/// Scores profiles; with thresholds, also classifies them. Throws ConfigError
/// when the thresholds were calibrated for a different artifact.
std::vector<ScoreRecord> score_with_artifact(
    const Artifact& a, std::span<const orders::PharmacologicalProfile> profiles,
    const eval::ThresholdSet* thresholds);

void cli_score(const std::string& artifact_path, const std::string& profiles_path,
               const std::optional<std::string>& thresholds_path, const std::string& out_path);

/// Thresholds from the finite scores of a score file, pinned to its artifact.
eval::ThresholdSet calibrate_from_records(std::span<const ScoreRecord> records);
void cli_calibrate(const std::string& scores_path, const std::string& out_path);

/// Confusion matrix and metrics (when records carry a class), PR curve and
/// AUPR, per-department F1 and ratios. Throws Error when a record has no
/// labeled profile in `truth` or when nothing aligns.
nlohmann::ordered_json evaluate_records(std::span<const ScoreRecord> records,
                                        std::span<const orders::PharmacologicalProfile> truth,
                                        eval::PrCurve* curve_out = nullptr);

/// Writes report.json, pr_curve.csv and pr_curve.jsonl into `out_dir`.
nlohmann::ordered_json cli_evaluate(const std::string& scores_path, const std::string& truth_path,
                                    const std::string& out_dir);

}  // namespace rxsentinel::service
