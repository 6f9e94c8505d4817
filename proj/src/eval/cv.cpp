#include "rxsentinel/eval/cv.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "rxsentinel/errors.hpp"

namespace rxsentinel::eval {

std::vector<CvSplit> cv_splits(std::span<const orders::Hospitalization> hospitalizations,
                               int train_window_years) {
  if (train_window_years < 1 || train_window_years > 4) {
    throw ConfigError("training window must be 1 to 4 years");
  }
  std::map<int, std::vector<std::string>> by_year;
  for (const auto& h : hospitalizations) by_year[orders::hospitalization_year(h)].push_back(h.id);

  std::vector<int> missing;
  for (int v : kValidationYears) {
    for (int y = v - train_window_years; y <= v; ++y) {
      if (!by_year.contains(y) && std::find(missing.begin(), missing.end(), y) == missing.end()) {
        missing.push_back(y);
      }
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string list;
    for (int y : missing) list += (list.empty() ? "" : ", ") + std::to_string(y);
    throw ConfigError("corpus has no hospitalizations in year(s) " + list);
  }

  std::vector<CvSplit> out;
  for (int v : kValidationYears) {
    CvSplit s;
    s.validation_year = v;
    s.validation_ids = by_year[v];
    for (int y = v - train_window_years; y < v; ++y) {
      s.training_years.push_back(y);
      const auto& ids = by_year[y];
      s.train_ids.insert(s.train_ids.end(), ids.begin(), ids.end());
    }
    std::sort(s.train_ids.begin(), s.train_ids.end());
    std::sort(s.validation_ids.begin(), s.validation_ids.end());
    out.push_back(std::move(s));
  }
  return out;
}

ProfileSplit split_profiles(std::span<const orders::PharmacologicalProfile> profiles,
                            const CvSplit& split) {
  const std::unordered_set<std::string> train(split.train_ids.begin(), split.train_ids.end());
  const std::unordered_set<std::string> val(split.validation_ids.begin(),
                                            split.validation_ids.end());
  ProfileSplit out;
  for (const auto& p : profiles) {
    if (train.contains(p.hospitalization_id)) {
      out.train.push_back(p);
    } else if (val.contains(p.hospitalization_id)) {
      out.validation.push_back(p);
    }
  }
  return out;
}

std::vector<orders::PharmacologicalProfile> profiles_in_years(
    std::span<const orders::PharmacologicalProfile> profiles,
    std::span<const orders::Hospitalization> hospitalizations, int first_year, int last_year) {
  std::unordered_map<std::string, int> year;
  for (const auto& h : hospitalizations) year[h.id] = orders::hospitalization_year(h);
  std::vector<orders::PharmacologicalProfile> out;
  for (const auto& p : profiles) {
    auto it = year.find(p.hospitalization_id);
    if (it != year.end() && it->second >= first_year && it->second < last_year) out.push_back(p);
  }
  return out;
}

}  // namespace rxsentinel::eval
