#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "rxsentinel/orders.hpp"

namespace rxsentinel::eval {

inline constexpr std::array<int, 3> kValidationYears = {2015, 2016, 2017};

struct CvSplit {
  int validation_year = 0;
  std::vector<int> training_years;            // ascending
  std::vector<std::string> train_ids;         // sorted hospitalization ids
  std::vector<std::string> validation_ids;    // sorted hospitalization ids
};

/// Three temporal folds. Each hospitalization belongs to the year it was
/// admitted. Throws ConfigError when the window is outside [1, 4] or when a
/// required year has no hospitalizations.
std::vector<CvSplit> cv_splits(std::span<const orders::Hospitalization> hospitalizations,
                               int train_window_years);

struct ProfileSplit {
  std::vector<orders::PharmacologicalProfile> train;
  std::vector<orders::PharmacologicalProfile> validation;
};

/// Routes each profile to the side its hospitalization is on; profiles of
/// hospitalizations in neither side are dropped.
ProfileSplit split_profiles(std::span<const orders::PharmacologicalProfile> profiles,
                            const CvSplit& split);

/// Profiles whose hospitalization was admitted in [first_year, last_year).
std::vector<orders::PharmacologicalProfile> profiles_in_years(
    std::span<const orders::PharmacologicalProfile> profiles,
    std::span<const orders::Hospitalization> hospitalizations, int first_year, int last_year);

}  // namespace rxsentinel::eval
