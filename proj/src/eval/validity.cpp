#include "rxsentinel/eval/validity.hpp"

namespace rxsentinel::eval {

using orders::Department;

DepartmentRatios department_ratios(std::span<const DepartmentLabel> classifications) {
  DepartmentRatios r;
  std::map<Department, std::size_t> atypical;
  std::size_t atypical_total = 0;
  for (const auto& [dept, label] : classifications) {
    ++r.count[dept];
    if (label == orders::Label::atypical) {
      ++atypical[dept];
      ++atypical_total;
    }
  }
  for (const auto& [dept, n] : r.count) {
    r.ratio[dept] = static_cast<double>(atypical[dept]) / static_cast<double>(n);
  }
  r.total = classifications.size();
  r.overall = r.total == 0 ? 0.0
                           : static_cast<double>(atypical_total) / static_cast<double>(r.total);
  return r;
}

bool clinically_valid(const DepartmentRatios& r) {
  auto get = [&](Department d) -> const double* {
    auto it = r.ratio.find(d);
    return it == r.ratio.end() ? nullptr : &it->second;
  };
  const double* nicu = get(Department::nicu);
  const double* onc = get(Department::oncology);
  const double* obgyn = get(Department::obgyn);
  const double* gped = get(Department::general_ped);
  if (!nicu || !onc || !obgyn || !gped) return false;
  return *nicu < *onc && *obgyn < *gped;
}

}  // namespace rxsentinel::eval
