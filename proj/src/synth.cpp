#include "rxsentinel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "rxsentinel/errors.hpp"
#include "rxsentinel/random.hpp"

namespace rxsentinel::synth {

using orders::Department;
using orders::DrugId;
using orders::Hospitalization;
using orders::OrderEvent;
using orders::OrderLog;

namespace {

struct WeightedPicker {
  std::vector<std::size_t> items;
  std::vector<double> cumulative;

  std::size_t pick(Rng& rng) const {
    const double u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto pos = std::min<std::size_t>(it - cumulative.begin(), items.size() - 1);
    return items[pos];
  }
};

WeightedPicker zipf_picker(std::vector<std::size_t> items, double exponent) {
  WeightedPicker p{std::move(items), {}};
  double total = 0.0;
  for (std::size_t r = 0; r < p.items.size(); ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
    p.cumulative.push_back(total);
  }
  return p;
}

std::string numbered(char prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, n);
  return buf;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

struct DepartmentModel {
  std::vector<std::size_t> pool;
  std::vector<std::vector<std::size_t>> templates;
  WeightedPicker template_picker;
  WeightedPicker tail;
};

}  // namespace

SynthConfig default_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  // protocol_count, adherence, weight, extra_drugs_mean
  cfg.departments = {
      {Department::obgyn, 4, 0.95, 0.30, 1.0},
      {Department::general_ped, 14, 0.60, 0.18, 4.0},
      {Department::surgery, 8, 0.80, 0.09, 2.5},
      {Department::oncology, 14, 0.55, 0.08, 4.5},
      {Department::specialized_ped, 10, 0.75, 0.07, 3.0},
      {Department::nicu, 3, 0.96, 0.10, 1.0},
      {Department::nursery, 2, 0.95, 0.12, 0.5},
      {Department::picu, 6, 0.80, 0.06, 3.0},
  };
  return cfg;
}

SynthConfig acceptance_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.vocab_size = 600;
  cfg.anomaly_rate = 0.10;
  cfg.hospitalizations_per_year = 720;
  cfg.template_min = 3;
  cfg.template_max = 5;
  cfg.shared_fraction = 0.04;
  cfg.tail_exponent = 1.0;
  cfg.mean_stay_days = 5.0;
  cfg.late_start_probability = 0.5;
  cfg.early_stop_probability = 0.5;
  cfg.departments = {
      {Department::obgyn, 3, 0.95, 0.20, 0.15},
      {Department::general_ped, 12, 0.60, 0.16, 0.8},
      {Department::surgery, 6, 0.80, 0.10, 0.4},
      {Department::oncology, 12, 0.55, 0.14, 0.9},
      {Department::specialized_ped, 8, 0.75, 0.08, 0.5},
      {Department::nicu, 3, 0.96, 0.14, 0.15},
      {Department::nursery, 2, 0.95, 0.10, 0.1},
      {Department::picu, 5, 0.80, 0.08, 0.5},
  };
  return cfg;
}

void validate(const SynthConfig& cfg) {
  if (cfg.first_year > cfg.last_year) throw ConfigError("empty year span");
  if (cfg.vocab_size == 0) throw ConfigError("vocab_size must be positive");
  if (cfg.hospitalizations_per_year == 0) {
    throw ConfigError("hospitalizations_per_year must be positive");
  }
  if (cfg.departments.empty()) throw ConfigError("no departments configured");
  if (!(cfg.anomaly_rate >= 0.0 && cfg.anomaly_rate <= 0.5)) {
    throw ConfigError("anomaly_rate must lie in [0, 0.5]");
  }
  if (cfg.template_min < 3 || cfg.template_max > 15 ||
      cfg.template_min > cfg.template_max) {
    throw ConfigError("template sizes must satisfy 3 <= min <= max <= 15");
  }
  if (!(cfg.shared_fraction >= 0.0 && cfg.shared_fraction < 1.0)) {
    throw ConfigError("shared_fraction must lie in [0, 1)");
  }
  std::set<Department> seen;
  for (const auto& d : cfg.departments) {
    if (!seen.insert(d.department).second) {
      throw ConfigError("department listed twice");
    }
    if (d.protocol_count == 0) throw ConfigError("protocol_count must be positive");
    if (!(d.protocol_adherence >= 0.0 && d.protocol_adherence <= 1.0)) {
      throw ConfigError("protocol_adherence must lie in [0, 1]");
    }
    if (!(d.weight > 0.0)) throw ConfigError("department weight must be positive");
    if (d.extra_drugs_mean < 0.0) throw ConfigError("extra_drugs_mean must be >= 0");
  }
  const auto shared = static_cast<std::size_t>(
      std::llround(cfg.shared_fraction * static_cast<double>(cfg.vocab_size)));
  const std::size_t per_department =
      (cfg.vocab_size - std::min(shared, cfg.vocab_size)) / cfg.departments.size();
  if (per_department < cfg.template_max) {
    throw ConfigError("vocab_size " + std::to_string(cfg.vocab_size) +
                      " too small: each department needs at least " +
                      std::to_string(cfg.template_max) + " drugs");
  }
}

Corpus generate_corpus(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  const int width = std::max(4, static_cast<int>(std::to_string(cfg.vocab_size).size()));
  std::vector<DrugId> tokens;
  tokens.reserve(cfg.vocab_size);
  for (std::size_t i = 1; i <= cfg.vocab_size; ++i) tokens.emplace_back(numbered('D', i, width));

  std::vector<std::size_t> order(cfg.vocab_size);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));

  const auto shared_count = static_cast<std::size_t>(
      std::llround(cfg.shared_fraction * static_cast<double>(cfg.vocab_size)));
  const std::vector<std::size_t> shared(order.begin(), order.begin() + shared_count);
  const std::size_t n_depts = cfg.departments.size();
  const std::size_t per_department = (cfg.vocab_size - shared_count) / n_depts;

  std::vector<DepartmentModel> models(n_depts);
  for (std::size_t d = 0; d < n_depts; ++d) {
    auto& m = models[d];
    const auto first = order.begin() + shared_count + d * per_department;
    const auto last = d + 1 == n_depts ? order.end() : first + per_department;
    m.pool.assign(first, last);

    std::vector<std::size_t> template_ids;
    for (std::size_t t = 0; t < cfg.departments[d].protocol_count; ++t) {
      std::vector<std::size_t> candidates = m.pool;
      rng.shuffle(std::span<std::size_t>(candidates));
      const std::size_t size =
          cfg.template_min + rng.below(cfg.template_max - cfg.template_min + 1);
      candidates.resize(size);
      std::sort(candidates.begin(), candidates.end());
      m.templates.push_back(std::move(candidates));
      template_ids.push_back(t);
    }
    m.template_picker = zipf_picker(std::move(template_ids), 1.0);

    std::vector<std::size_t> tail = m.pool;
    tail.insert(tail.end(), shared.begin(), shared.end());
    rng.shuffle(std::span<std::size_t>(tail));
    m.tail = zipf_picker(std::move(tail), cfg.tail_exponent);
  }

  std::vector<std::size_t> dept_ids(n_depts);
  WeightedPicker dept_picker;
  {
    double total = 0.0;
    for (std::size_t d = 0; d < n_depts; ++d) {
      dept_ids[d] = d;
      total += cfg.departments[d].weight;
      dept_picker.cumulative.push_back(total);
    }
    dept_picker.items = dept_ids;
  }

  Corpus corpus;
  OrderLog& log = corpus.log;
  std::vector<std::string> patients;
  std::size_t order_index = 0;
  for (int year = cfg.first_year; year <= cfg.last_year; ++year) {
    const Date jan1(year, 1, 1);
    const std::uint64_t days_in_year = is_leap(year) ? 366 : 365;
    for (std::size_t i = 0; i < cfg.hospitalizations_per_year; ++i) {
      const std::size_t d = dept_picker.pick(rng);
      const DepartmentModel& m = models[d];
      const DepartmentSpec& spec = cfg.departments[d];

      Hospitalization h;
      h.id = numbered('H', log.hospitalizations.size() + 1, 7);
      if (!patients.empty() && rng.bernoulli(cfg.readmission_probability)) {
        h.patient_id = patients[rng.below(patients.size())];
      } else {
        patients.push_back(numbered('P', patients.size() + 1, 7));
        h.patient_id = patients.back();
      }
      h.department = spec.department;
      h.admission_date = jan1.plus_days(static_cast<long>(rng.below(days_in_year)));

      const long stay = 1 + static_cast<long>(rng.poisson(std::max(0.0, cfg.mean_stay_days - 1.0)));
      const auto& tmpl = m.templates[m.template_picker.pick(rng)];
      std::vector<std::size_t> drugs;
      std::vector<bool> from_template;
      for (std::size_t drug : tmpl) {
        if (rng.bernoulli(spec.protocol_adherence)) {
          drugs.push_back(drug);
          from_template.push_back(true);
        }
      }
      if (drugs.empty()) {
        drugs.push_back(tmpl[rng.below(tmpl.size())]);
        from_template.push_back(true);
      }
      const std::uint64_t extras = rng.poisson(spec.extra_drugs_mean);
      for (std::uint64_t e = 0; e < extras; ++e) {
        const std::size_t drug = m.tail.pick(rng);
        if (std::find(drugs.begin(), drugs.end(), drug) == drugs.end()) {
          drugs.push_back(drug);
          from_template.push_back(false);
        }
      }

      for (std::size_t k = 0; k < drugs.size(); ++k) {
        long start = 0;
        long end = stay - 1;
        if (from_template[k]) {
          if (rng.bernoulli(cfg.late_start_probability)) start = static_cast<long>(rng.below(stay));
          if (rng.bernoulli(cfg.early_stop_probability)) {
            end = start + static_cast<long>(rng.below(stay - start));
          }
        } else {
          start = static_cast<long>(rng.below(stay));
          end = start + static_cast<long>(rng.below(stay - start));
        }
        OrderEvent ev{h.id, tokens[drugs[k]], h.admission_date.plus_days(start),
                      h.admission_date.plus_days(end), order_index++};
        if (rng.bernoulli(cfg.open_end_probability)) ev.end.reset();
        log.orders.push_back(std::move(ev));
      }
      log.hospitalizations.push_back(std::move(h));
    }
  }
  corpus.truth.order_atypical.assign(log.orders.size(), false);

  std::stable_sort(log.orders.begin(), log.orders.end(),
                   [](const OrderEvent& a, const OrderEvent& b) {
                     if (a.hospitalization_id != b.hospitalization_id) {
                       return a.hospitalization_id < b.hospitalization_id;
                     }
                     return a.start < b.start;
                   });
  if (cfg.anomaly_rate > 0.0) {
    return inject_anomalies(log, cfg.anomaly_rate, rng.next());
  }
  return corpus;
}

Corpus inject_anomalies(const OrderLog& log, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 0.5)) {
    throw ConfigError("injection rate must lie in (0, 0.5]");
  }
  Rng rng(seed);
  std::unordered_map<std::string, Department> dept_of;
  for (const auto& h : log.hospitalizations) dept_of.emplace(h.id, h.department);

  std::map<Department, std::set<DrugId>> pools;
  std::map<DrugId, std::size_t> frequency;
  std::map<std::string, std::map<DrugId, std::size_t>> hosp_drugs;
  for (const auto& ev : log.orders) {
    pools[dept_of.at(ev.hospitalization_id)].insert(ev.drug);
    ++frequency[ev.drug];
    ++hosp_drugs[ev.hospitalization_id][ev.drug];
  }

  std::vector<std::pair<std::size_t, DrugId>> ranked;
  for (const auto& [drug, count] : frequency) ranked.emplace_back(count, drug);
  std::sort(ranked.begin(), ranked.end());
  const std::size_t rare_count = (ranked.size() + 9) / 10;
  std::vector<DrugId> rare;
  for (std::size_t i = 0; i < rare_count; ++i) rare.push_back(ranked[i].second);

  // Per department: for each other department, the drugs of its pool that
  // never occur in this department.
  std::map<Department, std::vector<std::vector<DrugId>>> foreign;
  for (const auto& [dept, pool] : pools) {
    auto& lists = foreign[dept];
    for (const auto& [other, other_pool] : pools) {
      if (other == dept) continue;
      std::vector<DrugId> only_other;
      std::set_difference(other_pool.begin(), other_pool.end(), pool.begin(),
                          pool.end(), std::back_inserter(only_other));
      if (!only_other.empty()) lists.push_back(std::move(only_other));
    }
  }

  std::size_t max_index = 0;
  for (std::size_t i = 0; i < log.orders.size(); ++i) {
    max_index = std::max(max_index, log.orders[i].source_index);
  }
  std::vector<std::size_t> position(log.orders.empty() ? 0 : max_index + 1, 0);
  for (std::size_t i = 0; i < log.orders.size(); ++i) position[log.orders[i].source_index] = i;

  Corpus out{log, {}};
  out.truth.order_atypical.assign(position.size(), false);
  auto pick_absent = [&](const std::vector<DrugId>& candidates,
                         const std::map<DrugId, std::size_t>& present)
      -> std::optional<DrugId> {
    std::vector<const DrugId*> usable;
    for (const auto& c : candidates) {
      if (!present.contains(c)) usable.push_back(&c);
    }
    if (usable.empty()) return std::nullopt;
    return *usable[rng.below(usable.size())];
  };

  for (std::size_t src = 0; src < position.size(); ++src) {
    if (!rng.bernoulli(rate)) continue;
    OrderEvent& ev = out.log.orders[position[src]];
    auto& present = hosp_drugs[ev.hospitalization_id];
    const auto& lists = foreign[dept_of.at(ev.hospitalization_id)];
    auto cross = [&]() -> std::optional<DrugId> {
      if (lists.empty()) return std::nullopt;
      return pick_absent(lists[rng.below(lists.size())], present);
    };
    const bool cross_department = rng.bernoulli(0.5);
    std::optional<DrugId> replacement = cross_department ? cross() : pick_absent(rare, present);
    if (!replacement) replacement = cross_department ? pick_absent(rare, present) : cross();
    if (!replacement) continue;
    if (--present[ev.drug] == 0) present.erase(ev.drug);
    ++present[*replacement];
    ev.drug = *replacement;
    out.truth.order_atypical[src] = true;
  }
  return out;
}

std::vector<orders::Label> profile_truth(const orders::ReconstructedProfiles& profiles,
                                         const GroundTruth& truth) {
  std::vector<orders::Label> labels;
  labels.reserve(profiles.profiles.size());
  for (const auto& sources : profiles.active_orders) {
    bool atypical = false;
    for (std::size_t s : sources) atypical = atypical || truth.order_atypical.at(s);
    labels.push_back(atypical ? orders::Label::atypical : orders::Label::typical);
  }
  return labels;
}

std::vector<orders::PharmacologicalProfile> labeled_profiles(const Corpus& corpus) {
  auto rec = orders::reconstruct_profiles_with_sources(corpus.log.orders,
                                                       corpus.log.hospitalizations);
  const auto labels = profile_truth(rec, corpus.truth);
  for (std::size_t i = 0; i < labels.size(); ++i) rec.profiles[i].label = labels[i];
  return std::move(rec.profiles);
}

void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
  for (std::size_t i = 0; i < truth.order_atypical.size(); ++i) {
    nlohmann::ordered_json rec;
    rec["order"] = i;
    rec["atypical"] = static_cast<bool>(truth.order_atypical[i]);
    out << rec.dump() << '\n';
  }
}

GroundTruth read_ground_truth(std::istream& in) {
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
      const auto index = rec.at("order").get<std::size_t>();
      if (index >= truth.order_atypical.size()) truth.order_atypical.resize(index + 1, false);
      truth.order_atypical[index] = rec.at("atypical").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return truth;
}

}  // namespace rxsentinel::synth
