#include "rxsentinel/service/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "rxsentinel/detectors/encoding.hpp"
#include "rxsentinel/digest.hpp"
#include "rxsentinel/errors.hpp"
#include "rxsentinel/eval/cv.hpp"
#include "rxsentinel/eval/validity.hpp"

namespace rxsentinel::service {

namespace fs = std::filesystem;
using orders::Department;
using orders::Label;
using orders::PharmacologicalProfile;

namespace {

constexpr std::size_t kAutoencoderEpochs = 11;
constexpr std::size_t kGanomalyEpochs = 21;

std::string year_list(const std::set<int>& years) {
  std::string out;
  int run_start = 0;
  int prev = 0;
  bool open = false;
  auto close = [&] {
    if (!open) return;
    if (!out.empty()) out += ", ";
    out += run_start == prev ? std::to_string(prev)
                             : std::to_string(run_start) + "-" + std::to_string(prev);
  };
  for (int y : years) {
    if (open && y == prev + 1) {
      prev = y;
      continue;
    }
    close();
    run_start = prev = y;
    open = true;
  }
  close();
  return out.empty() ? "none" : out;
}

nlohmann::ordered_json config_json(const TrainOptions& opts, std::size_t epochs) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(opts.kind));
  j["window_years"] = opts.window_years;
  j["seed"] = opts.seed;
  j["epochs"] = epochs;
  switch (opts.kind) {
    case ModelKind::frequency:
      break;
    case ModelKind::iforest: {
      const baselines::IsolationForestParams p;
      j["components"] = opts.iforest_components;
      j["trees"] = p.tree_count;
      j["subsample"] = p.subsample;
      j["contamination"] = p.contamination;
      break;
    }
    case ModelKind::autoencoder: {
      const detectors::AeTrainConfig c;
      j["hidden"] = c.architecture.hidden;
      j["latent"] = c.architecture.latent;
      j["dropout"] = c.architecture.dropout;
      j["learning_rate"] = c.learning_rate;
      j["batch"] = c.batch_size;
      break;
    }
    case ModelKind::ganomaly: {
      const detectors::GanomalyTrainConfig c;
      const detectors::GanomalyLossWeights w;
      j["hidden"] = c.architecture.hidden;
      j["latent"] = c.architecture.latent;
      j["dropout"] = c.architecture.dropout;
      j["extractor"] = {c.architecture.extractor_hidden, c.architecture.extractor_features};
      j["learning_rates"] = {c.generator_learning_rate, c.extractor_learning_rate};
      j["batch"] = c.batch_size;
      j["weights"] = {w.contextual, w.adversarial, w.encoder, w.encoder_l1, w.encoder_l2};
      break;
    }
  }
  return j;
}

std::string month_tag(int year, unsigned month) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", year, month);
  return buf;
}

}  // namespace

Artifact fit_artifact(std::span<const PharmacologicalProfile> profiles, const TrainOptions& opts,
                      int first_year, int last_year) {
  if (profiles.empty()) throw EmptyCorpusError("no training profiles in the window");
  Artifact a;
  a.kind = opts.kind;
  a.vocabulary = orders::build_vocabulary(profiles);
  std::size_t epochs = 0;
  Rng rng(opts.seed);
  switch (opts.kind) {
    case ModelKind::frequency:
      a.model = baselines::freq_fit(profiles);
      break;
    case ModelKind::iforest: {
      baselines::LsiOptions lo;
      lo.seed = rng.next();
      const std::size_t k = std::min({opts.iforest_components, profiles.size(),
                                      a.vocabulary.size()});
      const auto fit =
          baselines::lsi_fit_matrix(baselines::count_matrix(profiles, a.vocabulary), k, lo);
      baselines::IsolationForestParams fp;
      fp.seed = rng.next();
      fp.subsample = std::min(fp.subsample, profiles.size());
      if (fp.subsample < 2) throw EmptyCorpusError("isolation forest needs at least 2 profiles");
      a.model = IforestModel{fit.basis, baselines::iforest_fit(fit.training_embedding, fp)};
      break;
    }
    case ModelKind::autoencoder: {
      detectors::AeTrainConfig cfg;
      cfg.fixed_epochs = opts.epochs.value_or(kAutoencoderEpochs);
      epochs = cfg.fixed_epochs;
      const nn::Matrix x = detectors::encode_batch(profiles, a.vocabulary);
      a.model = detectors::ae_train(x, nullptr, cfg, rng.next()).model;
      break;
    }
    case ModelKind::ganomaly: {
      detectors::GanomalyTrainConfig cfg;
      cfg.fixed_epochs = opts.epochs.value_or(kGanomalyEpochs);
      epochs = cfg.fixed_epochs;
      const nn::Matrix x = detectors::encode_batch(profiles, a.vocabulary);
      a.model = detectors::ganomaly_train(x, nullptr, cfg, {}, rng.next()).model;
      break;
    }
  }
  a.metadata.as_of = opts.as_of.to_string();
  a.metadata.window_years = opts.window_years;
  a.metadata.first_year = first_year;
  a.metadata.last_year = last_year;
  a.metadata.seed = opts.seed;
  a.metadata.epochs = epochs;
  a.metadata.training_profiles = profiles.size();
  a.metadata.config_digest = sha256_hex(config_json(opts, epochs).dump());
  return a;
}

Artifact train_artifact(const orders::OrderLog& log, const TrainOptions& opts) {
  if (opts.window_years < 1) throw ConfigError("window must be at least one year");
  const int last = opts.as_of.year();
  const int first = last - opts.window_years;
  std::set<int> covered;
  for (const auto& h : log.hospitalizations) covered.insert(orders::hospitalization_year(h));
  std::set<int> missing;
  for (int y = first; y < last; ++y) {
    if (!covered.contains(y)) missing.insert(y);
  }
  if (!missing.empty()) {
    throw ConfigError("insufficient data: window " + std::to_string(first) + "-" +
                      std::to_string(last - 1) + " lacks " + year_list(missing) +
                      "; data covers " + year_list(covered));
  }
  const auto profiles = orders::reconstruct_profiles(log.orders, log.hospitalizations);
  const auto selected = eval::profiles_in_years(profiles, log.hospitalizations, first, last);
  return fit_artifact(selected, opts, first, last);
}

std::string cli_train(const std::string& data_path, const std::string& out_path,
                      const TrainOptions& opts) {
  const Artifact a = train_artifact(orders::ingest_orders_file(data_path), opts);
  save_artifact(out_path, a);
  return artifact_digest(a);
}

std::vector<RetrainOutput> cli_retrain_schedule(const std::string& data_path,
                                                const std::string& out_dir,
                                                const std::string& start_month, int months,
                                                const TrainOptions& opts) {
  if (months < 1) throw ConfigError("months must be positive");
  if (start_month.size() != 7 || start_month[4] != '-') {
    throw ConfigError("start month must look like YYYY-MM");
  }
  const Date start = Date::parse(start_month + "-01");
  const orders::OrderLog log = orders::ingest_orders_file(data_path);
  fs::create_directories(out_dir);
  std::vector<RetrainOutput> out;
  int year = start.year();
  unsigned month = start.month();
  for (int i = 0; i < months; ++i) {
    TrainOptions o = opts;
    o.as_of = Date(year, month, 1);
    const Artifact a = train_artifact(log, o);
    const std::string tag = month_tag(year, month);
    const std::string path =
        (fs::path(out_dir) / (std::string(to_string(opts.kind)) + "-" + tag + ".rxsa")).string();
    save_artifact(path, a);
    out.push_back({tag, path, artifact_digest(a)});
    if (++month > 12) {
      month = 1;
      ++year;
    }
  }
  return out;
}

std::vector<ScoreRecord> score_with_artifact(const Artifact& a,
                                             std::span<const PharmacologicalProfile> profiles,
                                             const eval::ThresholdSet* thresholds) {
  const std::string digest = artifact_digest(a);
  if (thresholds != nullptr && thresholds->artifact_digest != digest) {
    throw ConfigError("thresholds were calibrated for artifact " + thresholds->artifact_digest +
                      ", not " + digest);
  }
  const auto scores = score_profiles(a, profiles);
  std::vector<ScoreRecord> out;
  out.reserve(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    ScoreRecord r;
    r.profile_id = profiles[i].id();
    r.hospitalization_id = profiles[i].hospitalization_id;
    r.department = profiles[i].department;
    r.score = scores[i].score;
    if (thresholds != nullptr) {
      r.label = eval::classify_with_fallback(r.score, r.department, *thresholds);
    }
    if (scores[i].flags) {
      std::vector<std::string> f;
      for (const auto& d : *scores[i].flags) f.push_back(d.code());
      r.flags = std::move(f);
    }
    r.oov = scores[i].oov;
    r.artifact_digest = digest;
    out.push_back(std::move(r));
  }
  return out;
}

void cli_score(const std::string& artifact_path, const std::string& profiles_path,
               const std::optional<std::string>& thresholds_path, const std::string& out_path) {
  const Artifact a = load_artifact(artifact_path);
  const auto profiles = orders::read_profiles_file(profiles_path);
  std::optional<eval::ThresholdSet> t;
  if (thresholds_path) t = eval::read_thresholds_file(*thresholds_path);
  const auto records = score_with_artifact(a, profiles, t ? &*t : nullptr);
  std::ofstream out(out_path);
  if (!out) throw Error("cannot write " + out_path);
  write_score_records(out, records);
}

eval::ThresholdSet calibrate_from_records(std::span<const ScoreRecord> records) {
  if (records.empty()) throw EmptyCorpusError("no score records to calibrate on");
  const std::string& digest = records.front().artifact_digest;
  std::vector<eval::DepartmentScore> scores;
  for (const auto& r : records) {
    if (r.artifact_digest != digest) {
      throw ConfigError("score records come from more than one artifact");
    }
    if (std::isfinite(r.score)) scores.emplace_back(r.department, r.score);
  }
  eval::ThresholdSet t = eval::calibrate_thresholds(scores);
  t.artifact_digest = digest;
  return t;
}

void cli_calibrate(const std::string& scores_path, const std::string& out_path) {
  eval::write_thresholds_file(out_path, calibrate_from_records(read_score_file(scores_path)));
}

nlohmann::ordered_json evaluate_records(std::span<const ScoreRecord> records,
                                        std::span<const PharmacologicalProfile> truth,
                                        eval::PrCurve* curve_out) {
  std::unordered_map<std::string, Label> labels;
  for (const auto& p : truth) {
    if (p.label) labels[p.id()] = *p.label;
  }
  std::vector<eval::ScoredTruth> scored;
  std::size_t missing = 0;
  std::string first_missing;
  bool classified = !records.empty();
  for (const auto& r : records) {
    auto it = labels.find(r.profile_id);
    if (it == labels.end()) {
      if (missing++ == 0) first_missing = r.profile_id;
      continue;
    }
    scored.push_back({r.score, it->second == Label::atypical});
    classified = classified && r.label.has_value();
  }
  if (scored.empty()) throw Error("no score record matches a labeled truth profile");
  if (missing > 0) {
    throw Error(std::to_string(missing) + " score record(s) have no labeled truth profile, e.g. " +
                first_missing);
  }

  nlohmann::ordered_json report;
  report["kind"] = "evaluation";
  report["records"] = scored.size();
  std::size_t positives = 0;
  for (const auto& s : scored) positives += s.truth ? 1 : 0;
  report["positives"] = positives;
  report["prevalence"] = static_cast<double>(positives) / static_cast<double>(scored.size());
  if (positives > 0) {
    eval::PrCurve curve = eval::pr_curve(scored);
    report["aupr"] = curve.aupr;
    if (curve_out != nullptr) *curve_out = std::move(curve);
  } else {
    report["aupr"] = nullptr;
  }

  if (!classified) {
    report["confusion"] = nullptr;
    report["metrics"] = nullptr;
    report["departments"] = nlohmann::ordered_json::object();
    return report;
  }
  eval::ConfusionMatrix overall;
  std::map<Department, eval::ConfusionMatrix> per_dept;
  std::vector<eval::DepartmentLabel> classes;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool predicted = *records[i].label == Label::atypical;
    overall.add(predicted, scored[i].truth);
    per_dept[records[i].department].add(predicted, scored[i].truth);
    classes.emplace_back(records[i].department, *records[i].label);
  }
  report["confusion"] = eval::confusion_to_json(overall);
  report["metrics"] = eval::metrics_to_json(eval::metrics(overall));
  const eval::DepartmentRatios ratios = eval::department_ratios(classes);
  nlohmann::ordered_json depts = nlohmann::ordered_json::object();
  for (const auto& [dept, cm] : per_dept) {
    const auto m = eval::metrics(cm);
    depts[std::string(orders::to_string(dept))] = {
        {"confusion", eval::confusion_to_json(cm)},
        {"f1", m.f1 ? nlohmann::ordered_json(*m.f1) : nlohmann::ordered_json()},
        {"flagged_ratio", ratios.ratio.at(dept)}};
  }
  report["departments"] = depts;
  report["flagged_ratio"] = ratios.overall;
  report["clinically_valid"] = eval::clinically_valid(ratios);
  return report;
}

nlohmann::ordered_json cli_evaluate(const std::string& scores_path, const std::string& truth_path,
                                    const std::string& out_dir) {
  const auto records = read_score_file(scores_path);
  const auto truth = orders::read_profiles_file(truth_path);
  eval::PrCurve curve;
  const auto report = evaluate_records(records, truth, &curve);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  std::ofstream(dir / "report.json") << report.dump(2) << "\n";
  std::ofstream(dir / "pr_curve.csv") << eval::pr_curve_csv(curve);
  std::ofstream(dir / "pr_curve.jsonl") << eval::pr_curve_jsonl(curve);
  return report;
}

}  // namespace rxsentinel::service
