#include "rxsentinel/eval/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "rxsentinel/errors.hpp"

namespace rxsentinel::eval {

using orders::Department;

const DepartmentThreshold* ThresholdSet::find(Department d) const {
  auto it = departments.find(d);
  return it == departments.end() ? nullptr : &it->second;
}

double nearest_rank(std::span<const double> values, double q) {
  if (values.empty()) throw DegenerateError("quantile of an empty set");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("quantile must be in (0, 1]");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(s.size())));
  rank = std::clamp<std::size_t>(rank, 1, s.size());
  return s[rank - 1];
}

std::vector<double> trim_above_quantile(std::span<const double> values, double q) {
  const double cut = nearest_rank(values, q);
  std::vector<double> kept;
  kept.reserve(values.size());
  for (double v : values) {
    if (v <= cut) kept.push_back(v);
  }
  return kept;
}

ThresholdSet calibrate_thresholds(std::span<const DepartmentScore> scores, std::size_t bins,
                                  double trim_quantile, std::size_t min_samples) {
  ThresholdSet out;
  out.bins = bins;
  out.trim_quantile = trim_quantile;
  std::map<Department, std::vector<double>> by_dept;
  std::vector<double> all;
  for (const auto& [dept, score] : scores) {
    if (!std::isfinite(score)) throw ConfigError("calibration scores must be finite");
    by_dept[dept].push_back(score);
    all.push_back(score);
  }
  for (const auto& [dept, values] : by_dept) {
    if (values.size() < min_samples) {
      out.warnings.push_back({dept, values.size(),
                              "fewer than " + std::to_string(min_samples) + " scores"});
      continue;
    }
    const std::vector<double> kept = trim_above_quantile(values, trim_quantile);
    try {
      const double threshold = otsu_threshold(kept, bins);
      out.departments[dept] = {threshold, values.size(), kept.size()};
    } catch (const DegenerateError&) {
      out.warnings.push_back({dept, values.size(), "trimmed scores are all equal"});
    }
  }
  if (all.size() >= min_samples) {
    try {
      out.pooled = otsu_threshold(trim_above_quantile(all, trim_quantile), bins);
    } catch (const DegenerateError&) {
    }
  }
  return out;
}

orders::Label classify_profile(double score, Department dept, const ThresholdSet& t) {
  const DepartmentThreshold* d = t.find(dept);
  if (d == nullptr) {
    throw ClassificationError("no threshold for department " + std::string(to_string(dept)));
  }
  return score > d->threshold ? orders::Label::atypical : orders::Label::typical;
}

orders::Label classify_with_fallback(double score, Department dept, const ThresholdSet& t) {
  if (t.find(dept) != nullptr) return classify_profile(score, dept, t);
  if (!t.pooled) {
    throw ClassificationError("no threshold for department " + std::string(to_string(dept)) +
                              " and no pooled threshold");
  }
  return score > *t.pooled ? orders::Label::atypical : orders::Label::typical;
}

nlohmann::ordered_json thresholds_to_json(const ThresholdSet& t) {
  nlohmann::ordered_json j;
  j["kind"] = "thresholds";
  j["artifact_digest"] = t.artifact_digest;
  j["trim_quantile"] = t.trim_quantile;
  j["bins"] = t.bins;
  nlohmann::ordered_json depts = nlohmann::ordered_json::object();
  for (const auto& [dept, d] : t.departments) {
    depts[std::string(to_string(dept))] = {
        {"threshold", d.threshold}, {"samples", d.samples}, {"kept", d.kept}};
  }
  j["departments"] = depts;
  j["pooled"] = t.pooled ? nlohmann::ordered_json(*t.pooled) : nlohmann::ordered_json();
  nlohmann::ordered_json warnings = nlohmann::ordered_json::array();
  for (const auto& w : t.warnings) {
    warnings.push_back({{"department", std::string(to_string(w.department))},
                        {"samples", w.samples},
                        {"reason", w.reason}});
  }
  j["warnings"] = warnings;
  return j;
}

ThresholdSet thresholds_from_json(const nlohmann::json& j) {
  try {
    if (j.at("kind").get<std::string>() != "thresholds") {
      throw FormatError("not a thresholds document");
    }
    ThresholdSet t;
    t.artifact_digest = j.at("artifact_digest").get<std::string>();
    t.trim_quantile = j.at("trim_quantile").get<double>();
    t.bins = j.at("bins").get<std::size_t>();
    for (const auto& [name, d] : j.at("departments").items()) {
      t.departments[orders::parse_department(name)] = {
          d.at("threshold").get<double>(), d.at("samples").get<std::size_t>(),
          d.at("kept").get<std::size_t>()};
    }
    if (!j.at("pooled").is_null()) t.pooled = j.at("pooled").get<double>();
    for (const auto& w : j.at("warnings")) {
      t.warnings.push_back({orders::parse_department(w.at("department").get<std::string>()),
                            w.at("samples").get<std::size_t>(),
                            w.at("reason").get<std::string>()});
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("thresholds: ") + e.what());
  }
}

void write_thresholds_file(const std::string& path, const ThresholdSet& t) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << thresholds_to_json(t).dump(2) << "\n";
}

ThresholdSet read_thresholds_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  try {
    return thresholds_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

}  // namespace rxsentinel::eval
