#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <utility>

#include "rxsentinel/orders.hpp"

namespace rxsentinel::eval {

struct DepartmentRatios {
  std::map<orders::Department, double> ratio;  // atypical fraction
  std::map<orders::Department, std::size_t> count;
  double overall = 0.0;
  std::size_t total = 0;
};

using DepartmentLabel = std::pair<orders::Department, orders::Label>;

DepartmentRatios department_ratios(std::span<const DepartmentLabel> classifications);

/// nicu below oncology and obgyn below general_ped. False when any of the
/// four departments is absent.
bool clinically_valid(const DepartmentRatios& r);

}  // namespace rxsentinel::eval
