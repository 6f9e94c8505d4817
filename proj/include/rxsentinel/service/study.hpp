#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "rxsentinel/eval/thresholds.hpp"
#include "rxsentinel/orders.hpp"

namespace rxsentinel::service {

struct QueueEntry {
  orders::PharmacologicalProfile profile;
  double score = 0.0;
  std::optional<std::vector<std::string>> flags;  // neural models only
};

enum class Phase : std::uint8_t { calibration, evaluation };
std::string_view to_string(Phase p);

struct StudyConfig {
  // Share of each department's patients whose profiles calibrate thresholds.
  double calibration_fraction = 0.33;
  // Explicit per-department calibration counts, overriding the fraction.
  std::map<orders::Department, std::size_t> calibration_counts;
  std::size_t min_calibration_samples = eval::kMinCalibrationSamples;
};

/// Everything recorded about one reviewed profile.
struct ReviewRecord {
  std::string profile_id;
  std::size_t queue_index = 0;
  std::string patient_id;
  orders::Department department{};
  Phase phase = Phase::evaluation;
  std::string pharmacist;
  double score = 0.0;
  std::optional<orders::Label> prediction;
  std::optional<double> threshold;
  std::string threshold_source;  // calibration, file, pooled, or empty
  std::optional<std::vector<std::string>> flags;
  std::map<std::string, orders::Label> ratings;
  std::int64_t served_ts = 0;
  std::int64_t last_rating_ts = 0;
  std::optional<std::int64_t> revealed_ts;
  std::optional<bool> agree;
  std::optional<std::int64_t> agreement_ts;

  std::size_t order_count = 0;
  bool fully_rated() const { return ratings.size() == order_count; }
  /// Atypical iff any order was rated atypical.
  orders::Label label_before() const;
};

struct Response {
  int status = 200;
  nlohmann::ordered_json body;
};

/// Review protocol state, rebuilt from an append-only event log. Every
/// change is an event: it is appended to <state_dir>/events.jsonl and then
/// applied, and replaying the file reproduces the same state. Calls are
/// serialized by one mutex.
class StudyState {
 public:
  /// Replays an existing log in `state_dir` (created if absent). An empty
  /// `state_dir` keeps the log in memory only.
  StudyState(std::vector<QueueEntry> queue, std::optional<eval::ThresholdSet> thresholds,
             StudyConfig cfg, std::string artifact_digest, std::string state_dir);

  Response next(const std::string& pharmacist);
  Response rate(const std::string& profile_id, const nlohmann::json& body,
                const std::string& pharmacist);
  Response prediction(const std::string& profile_id, const std::string& pharmacist);
  Response agreement(const std::string& profile_id, const nlohmann::json& body,
                     const std::string& pharmacist);
  Response metrics() const;
  Response health() const;

  std::vector<ReviewRecord> records() const;
  std::size_t event_count() const;
  std::map<orders::Department, std::size_t> calibration_quota() const;

 private:
  using Json = nlohmann::ordered_json;

  void replay();
  void emit(Json event);
  void apply(const nlohmann::json& event);
  Json metrics_locked() const;
  Json profile_view(const ReviewRecord& r) const;
  Response serve_locked(std::size_t queue_index, const std::string& pharmacist);
  std::optional<Response> check_patient(std::size_t queue_index) const;
  void maybe_calibrate(orders::Department d);

  std::vector<QueueEntry> queue_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::optional<eval::ThresholdSet> file_thresholds_;
  StudyConfig cfg_;
  std::string artifact_digest_;
  std::string queue_digest_;
  std::string log_path_;

  mutable std::mutex mu_;
  std::vector<ReviewRecord> records_;
  std::unordered_map<std::string, std::size_t> record_of_profile_;
  std::unordered_map<std::string, std::string> profile_of_patient_;
  std::map<orders::Department, std::size_t> quota_;
  std::map<orders::Department, std::size_t> calibration_served_;
  std::map<orders::Department, std::vector<double>> calibration_pool_;
  std::map<orders::Department, std::optional<double>> calibrated_;
  std::size_t events_ = 0;
  std::int64_t last_ts_ = 0;
  bool session_seen_ = false;
};

/// Zips profiles with their scores and per-drug flags, in file order.
std::vector<QueueEntry> build_queue(const std::vector<orders::PharmacologicalProfile>& profiles,
                                    const std::vector<double>& scores,
                                    const std::vector<std::optional<std::vector<std::string>>>& flags);

}  // namespace rxsentinel::service
