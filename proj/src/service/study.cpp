#include "rxsentinel/service/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "rxsentinel/digest.hpp"
#include "rxsentinel/errors.hpp"
#include "rxsentinel/eval/metrics.hpp"

namespace rxsentinel::service {

namespace fs = std::filesystem;
using orders::Department;
using orders::Label;

namespace {

using Json = nlohmann::ordered_json;

Response reject(int status, std::string code, std::string message) {
  return {status, Json{{"code", std::move(code)}, {"message", std::move(message)}}};
}

Json score_json(double s) { return std::isinf(s) && s > 0 ? Json("Infinity") : Json(s); }

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(); }

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Json comparison_json(const eval::ConfusionMatrix& cm) {
  return {{"confusion", eval::confusion_to_json(cm)},
          {"metrics", eval::metrics_to_json(eval::metrics(cm))}};
}

Json f1_json(const eval::ConfusionMatrix& cm) {
  const auto m = eval::metrics(cm);
  return m.f1 ? Json(*m.f1) : Json();
}

}  // namespace

std::string_view to_string(Phase p) { return p == Phase::calibration ? "calibration" : "evaluation"; }

Label ReviewRecord::label_before() const {
  for (const auto& [drug, rating] : ratings) {
    if (rating == Label::atypical) return Label::atypical;
  }
  return Label::typical;
}

StudyState::StudyState(std::vector<QueueEntry> queue, std::optional<eval::ThresholdSet> thresholds,
                       StudyConfig cfg, std::string artifact_digest, std::string state_dir)
    : queue_(std::move(queue)),
      file_thresholds_(std::move(thresholds)),
      cfg_(std::move(cfg)),
      artifact_digest_(std::move(artifact_digest)) {
  if (!(cfg_.calibration_fraction >= 0.0 && cfg_.calibration_fraction <= 1.0)) {
    throw ConfigError("calibration fraction must lie in [0, 1]");
  }
  std::string ids;
  std::map<Department, std::vector<std::string>> patients;
  for (std::size_t i = 0; i < queue_.size(); ++i) {
    const auto& p = queue_[i].profile;
    const std::string id = p.id();
    if (!by_id_.emplace(id, i).second) throw ConfigError("duplicate profile in queue: " + id);
    ids += id + "\n";
    patients[p.department].push_back(p.patient_id);
  }
  queue_digest_ = sha256_hex(ids);
  for (auto& [dept, list] : patients) {
    std::sort(list.begin(), list.end());
    const auto distinct =
        static_cast<double>(std::unique(list.begin(), list.end()) - list.begin());
    auto it = cfg_.calibration_counts.find(dept);
    quota_[dept] = it != cfg_.calibration_counts.end()
                       ? it->second
                       : static_cast<std::size_t>(std::llround(cfg_.calibration_fraction * distinct));
  }
  if (!state_dir.empty()) {
    fs::create_directories(state_dir);
    log_path_ = (fs::path(state_dir) / "events.jsonl").string();
    replay();
  }
  if (!session_seen_) {
    Json quota = Json::object();
    for (const auto& [d, q] : quota_) quota[std::string(orders::to_string(d))] = q;
    emit({{"type", "session"},
          {"artifact_digest", artifact_digest_},
          {"queue_digest", queue_digest_},
          {"quota", quota}});
  }
}

void StudyState::replay() {
  std::ifstream in(log_path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      apply(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("event log: ") + e.what());
    }
  }
}

void StudyState::emit(Json event) {
  const std::int64_t ts = std::max(now_ms(), last_ts_ + 1);
  Json e;
  e["seq"] = events_ + 1;
  e["ts"] = ts;
  for (auto& [k, v] : event.items()) e[k] = std::move(v);
  const std::string line = e.dump();
  if (!log_path_.empty()) {
    std::ofstream out(log_path_, std::ios::app);
    out << line << "\n";
    out.flush();
    if (!out) throw Error("cannot append to " + log_path_);
  }
  apply(nlohmann::json::parse(line));
}

void StudyState::apply(const nlohmann::json& e) {
  const std::string type = e.at("type").get<std::string>();
  const std::int64_t ts = e.at("ts").get<std::int64_t>();
  if (type == "session") {
    if (e.at("artifact_digest").get<std::string>() != artifact_digest_ ||
        e.at("queue_digest").get<std::string>() != queue_digest_) {
      throw FormatError("state directory belongs to a different artifact or queue");
    }
    session_seen_ = true;
  } else if (type == "served") {
    const std::string id = e.at("profile_id").get<std::string>();
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw FormatError("event log names unknown profile " + id);
    const QueueEntry& q = queue_[it->second];
    ReviewRecord r;
    r.profile_id = id;
    r.queue_index = it->second;
    r.patient_id = q.profile.patient_id;
    r.department = q.profile.department;
    r.phase = e.at("phase").get<std::string>() == "calibration" ? Phase::calibration
                                                                 : Phase::evaluation;
    r.pharmacist = e.at("pharmacist").get<std::string>();
    r.score = q.score;
    if (!e.at("prediction").is_null()) {
      r.prediction = orders::parse_label(e.at("prediction").get<std::string>());
    }
    if (!e.at("threshold").is_null()) r.threshold = e.at("threshold").get<double>();
    r.threshold_source = e.at("threshold_source").get<std::string>();
    r.flags = q.flags;
    r.order_count = q.profile.drugs.size();
    r.served_ts = ts;
    if (r.phase == Phase::calibration) {
      ++calibration_served_[r.department];
      if (std::isfinite(r.score)) calibration_pool_[r.department].push_back(r.score);
    }
    record_of_profile_[id] = records_.size();
    profile_of_patient_[r.patient_id] = id;
    records_.push_back(std::move(r));
  } else if (type == "rated") {
    ReviewRecord& r = records_.at(record_of_profile_.at(e.at("profile_id").get<std::string>()));
    for (const auto& [drug, rating] : e.at("ratings").items()) {
      r.ratings[drug] = orders::parse_label(rating.get<std::string>());
    }
    r.last_rating_ts = ts;
  } else if (type == "revealed") {
    records_.at(record_of_profile_.at(e.at("profile_id").get<std::string>())).revealed_ts = ts;
  } else if (type == "agreement") {
    ReviewRecord& r = records_.at(record_of_profile_.at(e.at("profile_id").get<std::string>()));
    r.agree = e.at("agreement").get<std::string>() == "agree";
    r.agreement_ts = ts;
  } else if (type == "calibrated") {
    const Department d = orders::parse_department(e.at("department").get<std::string>());
    calibrated_[d] = e.at("threshold").is_null() ? std::nullopt
                                                 : std::optional(e.at("threshold").get<double>());
  } else {
    throw FormatError("unknown event type " + type);
  }
  last_ts_ = std::max(last_ts_, ts);
  ++events_;
}

void StudyState::maybe_calibrate(Department d) {
  if (calibrated_.contains(d) || calibration_served_[d] < quota_[d]) return;
  std::vector<eval::DepartmentScore> scores;
  for (double s : calibration_pool_[d]) scores.emplace_back(d, s);
  const eval::ThresholdSet t =
      eval::calibrate_thresholds(scores, eval::kDefaultOtsuBins, eval::kTrimQuantile,
                                 cfg_.min_calibration_samples);
  Json event{{"type", "calibrated"},
             {"department", std::string(orders::to_string(d))},
             {"samples", scores.size()}};
  if (const auto* found = t.find(d)) {
    event["threshold"] = found->threshold;
  } else {
    event["threshold"] = nullptr;
    event["reason"] = t.warnings.empty() ? "no scores" : t.warnings.front().reason;
  }
  emit(std::move(event));
}

std::optional<Response> StudyState::check_patient(std::size_t queue_index) const {
  const auto& p = queue_[queue_index].profile;
  auto it = profile_of_patient_.find(p.patient_id);
  if (it != profile_of_patient_.end() && it->second != p.id()) {
    return reject(409, "PATIENT_SEEN",
                  "patient " + p.patient_id + " was already reviewed through " + it->second);
  }
  return std::nullopt;
}

StudyState::Json StudyState::profile_view(const ReviewRecord& r) const {
  const auto& p = queue_[r.queue_index].profile;
  Json items = Json::array();
  for (const auto& d : p.drugs) {
    auto it = r.ratings.find(d.code());
    items.push_back({{"drug", d.code()},
                      {"rating", it == r.ratings.end() ? Json()
                                                       : Json(std::string(orders::to_string(it->second)))}});
  }
  return {{"profile_id", r.profile_id},
          {"hospitalization_id", p.hospitalization_id},
          {"patient_id", p.patient_id},
          {"department", std::string(orders::to_string(p.department))},
          {"as_of", p.as_of.to_string()},
          {"phase", std::string(to_string(r.phase))},
          {"orders", items},
          {"rated", r.ratings.size()},
          {"total", r.order_count},
          {"revealed", r.revealed_ts.has_value()}};
}

Response StudyState::serve_locked(std::size_t queue_index, const std::string& pharmacist) {
  const QueueEntry& q = queue_[queue_index];
  const Department d = q.profile.department;
  const Phase phase =
      calibration_served_[d] < quota_[d] ? Phase::calibration : Phase::evaluation;
  std::optional<double> threshold;
  std::string source;
  if (phase == Phase::evaluation) {
    auto it = calibrated_.find(d);
    if (it != calibrated_.end() && it->second) {
      threshold = it->second;
      source = "calibration";
    }
  }
  if (!threshold && file_thresholds_) {
    if (const auto* t = file_thresholds_->find(d)) {
      threshold = t->threshold;
      source = "file";
    } else if (file_thresholds_->pooled) {
      threshold = file_thresholds_->pooled;
      source = "pooled";
    }
  }
  Json prediction;
  if (threshold) prediction = std::string(orders::to_string(q.score > *threshold ? Label::atypical
                                                                                   : Label::typical));
  emit({{"type", "served"},
        {"profile_id", q.profile.id()},
        {"phase", std::string(to_string(phase))},
        {"pharmacist", pharmacist},
        {"score", score_json(q.score)},
        {"prediction", prediction},
        {"threshold", optional_number(threshold)},
        {"threshold_source", source}});
  if (phase == Phase::calibration) maybe_calibrate(d);
  return {200, profile_view(records_.at(record_of_profile_.at(q.profile.id())))};
}

Response StudyState::next(const std::string& pharmacist) {
  std::lock_guard lock(mu_);
  for (const auto& r : records_) {
    if (r.pharmacist == pharmacist && !r.revealed_ts) return {200, profile_view(r)};
  }
  for (std::size_t i = 0; i < queue_.size(); ++i) {
    const auto& p = queue_[i].profile;
    if (profile_of_patient_.contains(p.patient_id)) continue;
    return serve_locked(i, pharmacist);
  }
  return reject(404, "QUEUE_EMPTY", "no unreviewed patients remain");
}

Response StudyState::rate(const std::string& profile_id, const nlohmann::json& body,
                          const std::string& pharmacist) {
  std::lock_guard lock(mu_);
  auto qi = by_id_.find(profile_id);
  if (qi == by_id_.end()) return reject(404, "UNKNOWN_PROFILE", "no profile " + profile_id);
  if (auto seen = check_patient(qi->second)) return *seen;
  const auto& drugs = queue_[qi->second].profile.drugs;

  if (!body.is_object() || !body.contains("ratings")) {
    return reject(400, "BAD_REQUEST", "body must carry a ratings object");
  }
  const auto& in = body.at("ratings");
  std::vector<std::pair<std::string, nlohmann::json>> pairs;
  if (in.is_object()) {
    for (const auto& [k, v] : in.items()) pairs.emplace_back(k, v);
  } else if (in.is_array()) {
    for (const auto& item : in) {
      if (!item.is_object() || !item.contains("drug") || !item.at("drug").is_string()) {
        return reject(400, "BAD_REQUEST", "each rating needs a drug and a rating");
      }
      pairs.emplace_back(item.at("drug").get<std::string>(),
                         item.contains("rating") ? item.at("rating") : nlohmann::json());
    }
  } else {
    return reject(400, "BAD_REQUEST", "ratings must be an object or an array");
  }
  if (pairs.empty()) return reject(400, "BAD_REQUEST", "no ratings given");
  Json accepted = Json::object();
  for (const auto& [drug, rating] : pairs) {
    const bool known = std::any_of(drugs.begin(), drugs.end(),
                                   [&](const orders::DrugId& d) { return d.code() == drug; });
    if (!known) return reject(400, "UNKNOWN_DRUG", drug + " is not an order of " + profile_id);
    if (!rating.is_string() || (rating != "typical" && rating != "atypical")) {
      return reject(400, "BAD_RATING", "rating for " + drug + " must be typical or atypical");
    }
    accepted[drug] = rating.get<std::string>();
  }

  if (!record_of_profile_.contains(profile_id)) serve_locked(qi->second, pharmacist);
  const ReviewRecord& before = records_.at(record_of_profile_.at(profile_id));
  if (before.revealed_ts) {
    return reject(409, "ALREADY_REVEALED", "ratings are closed once the prediction is shown");
  }
  emit({{"type", "rated"},
        {"profile_id", profile_id},
        {"pharmacist", pharmacist},
        {"ratings", accepted}});
  const ReviewRecord& r = records_.at(record_of_profile_.at(profile_id));
  Json view = profile_view(r);
  view["complete"] = r.fully_rated();
  return {200, view};
}

Response StudyState::prediction(const std::string& profile_id, const std::string& pharmacist) {
  std::lock_guard lock(mu_);
  if (!by_id_.contains(profile_id)) return reject(404, "UNKNOWN_PROFILE", "no profile " + profile_id);
  auto ri = record_of_profile_.find(profile_id);
  if (ri == record_of_profile_.end()) {
    return reject(409, "NOT_SERVED", profile_id + " has not been opened for review");
  }
  if (!records_[ri->second].fully_rated()) {
    const auto& r = records_[ri->second];
    Response out = reject(409, "RATE_FIRST",
                          "rate every order before viewing the prediction (" +
                              std::to_string(r.ratings.size()) + " of " +
                              std::to_string(r.order_count) + " rated)");
    out.body["rated"] = r.ratings.size();
    out.body["total"] = r.order_count;
    return out;
  }
  if (!records_[ri->second].revealed_ts) {
    emit({{"type", "revealed"}, {"profile_id", profile_id}, {"pharmacist", pharmacist}});
  }
  const ReviewRecord& r = records_[ri->second];
  Json flags;
  if (r.flags) flags = *r.flags;
  return {200,
          {{"profile_id", r.profile_id},
           {"phase", std::string(to_string(r.phase))},
           {"class", r.prediction ? Json(std::string(orders::to_string(*r.prediction))) : Json()},
           {"score", score_json(r.score)},
           {"threshold", optional_number(r.threshold)},
           {"threshold_source", r.threshold_source},
           {"flags", flags},
           {"label_before", std::string(orders::to_string(r.label_before()))},
           {"agreement", r.agree ? Json(*r.agree ? "agree" : "disagree") : Json()}}};
}

Response StudyState::agreement(const std::string& profile_id, const nlohmann::json& body,
                               const std::string& pharmacist) {
  std::lock_guard lock(mu_);
  if (!by_id_.contains(profile_id)) return reject(404, "UNKNOWN_PROFILE", "no profile " + profile_id);
  auto ri = record_of_profile_.find(profile_id);
  if (ri == record_of_profile_.end()) {
    return reject(409, "NOT_SERVED", profile_id + " has not been opened for review");
  }
  const ReviewRecord& r = records_[ri->second];
  if (!r.revealed_ts) return reject(409, "REVEAL_FIRST", "view the prediction before agreeing");
  if (!r.prediction) return reject(409, "NO_PREDICTION", "no threshold was available for this profile");
  if (!body.is_object() || !body.contains("agreement") || !body.at("agreement").is_string() ||
      (body.at("agreement") != "agree" && body.at("agreement") != "disagree")) {
    return reject(400, "BAD_AGREEMENT", "agreement must be agree or disagree");
  }
  const bool agree = body.at("agreement") == "agree";
  if (r.agree) {
    if (*r.agree != agree) return reject(409, "ALREADY_AGREED", "agreement was already recorded");
  } else {
    emit({{"type", "agreement"},
          {"profile_id", profile_id},
          {"pharmacist", pharmacist},
          {"agreement", agree ? "agree" : "disagree"}});
  }
  return {200, {{"profile_id", profile_id}, {"agreement", agree ? "agree" : "disagree"}}};
}

StudyState::Json StudyState::metrics_locked() const {
  eval::ConfusionMatrix order_cm;
  eval::ConfusionMatrix before_cm;
  eval::ConfusionMatrix after_cm;
  struct Dept {
    eval::ConfusionMatrix orders, before, after;
    std::size_t profiles = 0;
  };
  std::map<Department, Dept> depts;
  std::size_t calibration = 0;
  std::size_t evaluation = 0;
  std::size_t complete = 0;
  std::size_t agreed = 0;
  for (const auto& r : records_) {
    if (r.phase == Phase::calibration) {
      ++calibration;
      continue;
    }
    ++evaluation;
    if (!r.revealed_ts || !r.prediction) continue;
    ++complete;
    Dept& d = depts[r.department];
    ++d.profiles;
    const bool predicted = *r.prediction == Label::atypical;
    if (r.flags) {
      for (const auto& [drug, rating] : r.ratings) {
        const bool flagged = std::find(r.flags->begin(), r.flags->end(), drug) != r.flags->end();
        order_cm.add(flagged, rating == Label::atypical);
        d.orders.add(flagged, rating == Label::atypical);
      }
    }
    const bool before = r.label_before() == Label::atypical;
    before_cm.add(predicted, before);
    d.before.add(predicted, before);
    if (r.agree) {
      ++agreed;
      const bool truth = *r.agree ? predicted : !predicted;
      after_cm.add(predicted, truth);
      d.after.add(predicted, truth);
    }
  }
  Json by_dept = Json::object();
  for (const auto& [dept, d] : depts) {
    by_dept[std::string(orders::to_string(dept))] = {{"profiles", d.profiles},
                                                     {"orders_f1", f1_json(d.orders)},
                                                     {"profiles_before_f1", f1_json(d.before)},
                                                     {"profiles_after_f1", f1_json(d.after)}};
  }
  Json cal = Json::object();
  for (const auto& [dept, quota] : quota_) {
    auto served = calibration_served_.find(dept);
    auto c = calibrated_.find(dept);
    cal[std::string(orders::to_string(dept))] = {
        {"quota", quota},
        {"served", served == calibration_served_.end() ? 0 : served->second},
        {"complete", c != calibrated_.end()},
        {"threshold", c != calibrated_.end() ? optional_number(c->second) : Json()}};
  }
  return {{"records",
           {{"served", records_.size()},
            {"calibration", calibration},
            {"evaluation", evaluation},
            {"complete", complete},
            {"agreed", agreed}}},
          {"orders", comparison_json(order_cm)},
          {"profiles_before", comparison_json(before_cm)},
          {"profiles_after", comparison_json(after_cm)},
          {"departments", by_dept},
          {"calibration", cal}};
}

Response StudyState::metrics() const {
  std::lock_guard lock(mu_);
  return {200, metrics_locked()};
}

Response StudyState::health() const {
  std::lock_guard lock(mu_);
  return {200,
          {{"status", "ok"},
           {"artifact_digest", artifact_digest_},
           {"queue", queue_.size()},
           {"events", events_}}};
}

std::vector<ReviewRecord> StudyState::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t StudyState::event_count() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::map<Department, std::size_t> StudyState::calibration_quota() const {
  std::lock_guard lock(mu_);
  return quota_;
}

std::vector<QueueEntry> build_queue(const std::vector<orders::PharmacologicalProfile>& profiles,
                                    const std::vector<double>& scores,
                                    const std::vector<std::optional<std::vector<std::string>>>& flags) {
  if (scores.size() != profiles.size() || flags.size() != profiles.size()) {
    throw DimensionError("queue inputs differ in length");
  }
  std::vector<QueueEntry> out;
  out.reserve(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) out.push_back({profiles[i], scores[i], flags[i]});
  return out;
}

}  // namespace rxsentinel::service
