#include "rxsentinel/orders.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "rxsentinel/digest.hpp"
#include "rxsentinel/errors.hpp"

namespace rxsentinel::orders {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 8> kDepartmentNames = {
    "obgyn",    "general_ped",     "surgery", "oncology",
    "specialized_ped", "nicu", "nursery", "picu",
};

const std::string& require_string(const json& obj, const char* key,
                                  std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError(line, std::string("missing string field '") + key + "'");
  }
  return it->get_ref<const std::string&>();
}

Date require_date(const json& obj, const char* key, std::size_t line) {
  try {
    return Date::parse(require_string(obj, key, line));
  } catch (const ParseError& e) {
    if (e.line() != 0) throw;
    throw ParseError(line, e.what());
  }
}

}  // namespace

std::string_view to_string(Department d) {
  return kDepartmentNames.at(static_cast<std::size_t>(d));
}

Department parse_department(std::string_view token) {
  for (std::size_t i = 0; i < kDepartmentNames.size(); ++i) {
    if (kDepartmentNames[i] == token) return static_cast<Department>(i);
  }
  throw ParseError(0, "unknown department '" + std::string(token) + "'");
}

std::string_view to_string(Label l) {
  return l == Label::atypical ? "atypical" : "typical";
}

Label parse_label(std::string_view token) {
  if (token == "atypical") return Label::atypical;
  if (token == "typical") return Label::typical;
  throw ParseError(0, "unknown label '" + std::string(token) + "'");
}

DrugId::DrugId(std::string code) : code_(std::move(code)) {
  if (code_.empty()) throw ParseError(0, "empty drug id");
  for (unsigned char c : code_) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
        c == '\f') {
      throw ParseError(0, "drug id contains whitespace: '" + code_ + "'");
    }
  }
}

std::string PharmacologicalProfile::id() const {
  return hospitalization_id + "@" + as_of.to_string();
}

OrderLog ingest_orders(std::istream& source) {
  OrderLog log;
  std::unordered_set<std::string> hosp_ids;
  std::string line;
  std::size_t line_no = 0;
  std::size_t order_index = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "record is not an object");
    const std::string& kind = require_string(obj, "kind", line_no);
    try {
      if (kind == "hosp") {
        Hospitalization h;
        h.id = require_string(obj, "id", line_no);
        h.patient_id = require_string(obj, "patient_id", line_no);
        h.department = parse_department(require_string(obj, "department", line_no));
        h.admission_date = require_date(obj, "admission_date", line_no);
        if (h.id.empty()) throw ParseError(line_no, "empty hospitalization id");
        if (!hosp_ids.insert(h.id).second) {
          throw ReferentialError("line " + std::to_string(line_no) +
                                 ": duplicate hospitalization id '" + h.id + "'");
        }
        log.hospitalizations.push_back(std::move(h));
      } else if (kind == "order") {
        OrderEvent ev{require_string(obj, "hospitalization_id", line_no),
                      DrugId(require_string(obj, "drug", line_no)),
                      require_date(obj, "start", line_no), std::nullopt,
                      order_index++};
        auto end_it = obj.find("end");
        if (end_it != obj.end() && !end_it->is_null()) {
          ev.end = require_date(obj, "end", line_no);
          if (*ev.end < ev.start) {
            throw ParseError(line_no, "order ends before it starts");
          }
        }
        log.orders.push_back(std::move(ev));
      } else {
        throw ParseError(line_no, "unknown record kind '" + kind + "'");
      }
    } catch (const ParseError& e) {
      if (e.line() != 0) throw;
      throw ParseError(line_no, e.what());
    }
  }
  for (const auto& ev : log.orders) {
    if (!hosp_ids.contains(ev.hospitalization_id)) {
      throw ReferentialError("order " + std::to_string(ev.source_index) +
                             " references unknown hospitalization '" +
                             ev.hospitalization_id + "'");
    }
  }
  std::stable_sort(log.orders.begin(), log.orders.end(),
                   [](const OrderEvent& a, const OrderEvent& b) {
                     if (a.hospitalization_id != b.hospitalization_id) {
                       return a.hospitalization_id < b.hospitalization_id;
                     }
                     return a.start < b.start;
                   });
  return log;
}

OrderLog ingest_orders_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open order log '" + path + "'");
  return ingest_orders(in);
}

void write_order_log(std::ostream& out, const OrderLog& log) {
  for (const auto& h : log.hospitalizations) {
    ordered_json rec;
    rec["kind"] = "hosp";
    rec["id"] = h.id;
    rec["patient_id"] = h.patient_id;
    rec["department"] = to_string(h.department);
    rec["admission_date"] = h.admission_date.to_string();
    out << rec.dump() << '\n';
  }
  std::vector<const OrderEvent*> by_source;
  by_source.reserve(log.orders.size());
  for (const auto& ev : log.orders) by_source.push_back(&ev);
  std::sort(by_source.begin(), by_source.end(),
            [](const OrderEvent* a, const OrderEvent* b) {
              return a->source_index < b->source_index;
            });
  for (const OrderEvent* ev : by_source) {
    ordered_json rec;
    rec["kind"] = "order";
    rec["hospitalization_id"] = ev->hospitalization_id;
    rec["drug"] = ev->drug.code();
    rec["start"] = ev->start.to_string();
    rec["end"] = ev->end ? ordered_json(ev->end->to_string()) : ordered_json(nullptr);
    out << rec.dump() << '\n';
  }
}

ReconstructedProfiles reconstruct_profiles_with_sources(
    std::span<const OrderEvent> events,
    std::span<const Hospitalization> hosps) {
  std::map<std::string, std::vector<const OrderEvent*>> by_hosp;
  for (const auto& ev : events) by_hosp[ev.hospitalization_id].push_back(&ev);
  std::unordered_map<std::string, const Hospitalization*> hosp_index;
  for (const auto& h : hosps) hosp_index.emplace(h.id, &h);

  ReconstructedProfiles out;
  for (const auto& [hosp_id, evs] : by_hosp) {
    auto hit = hosp_index.find(hosp_id);
    if (hit == hosp_index.end()) {
      throw ReferentialError("unknown hospitalization '" + hosp_id + "'");
    }
    const Hospitalization& h = *hit->second;
    Date first = evs.front()->start;
    Date last = evs.front()->start;
    for (const OrderEvent* ev : evs) {
      first = std::min(first, ev->start);
      last = std::max(last, ev->end.value_or(ev->start));
    }
    // Compared against the last emitted set, so a gap day with nothing
    // active does not split one regimen into two identical profiles.
    std::vector<DrugId> previous;
    for (Date day = first; day <= last; day = day.plus_days(1)) {
      std::vector<DrugId> active;
      std::vector<std::size_t> sources;
      for (const OrderEvent* ev : evs) {
        const Date end = ev->end.value_or(last);
        if (ev->start <= day && day <= end) {
          active.push_back(ev->drug);
          sources.push_back(ev->source_index);
        }
      }
      std::sort(active.begin(), active.end());
      active.erase(std::unique(active.begin(), active.end()), active.end());
      if (!active.empty() && active != previous) {
        std::sort(sources.begin(), sources.end());
        out.profiles.push_back(PharmacologicalProfile{
            h.id, h.patient_id, h.department, day, active, std::nullopt});
        out.active_orders.push_back(std::move(sources));
        previous = std::move(active);
      }
    }
  }
  return out;
}

std::vector<PharmacologicalProfile> reconstruct_profiles(
    std::span<const OrderEvent> events,
    std::span<const Hospitalization> hosps) {
  return reconstruct_profiles_with_sources(events, hosps).profiles;
}

int hospitalization_year(const Hospitalization& h) {
  return h.admission_date.year();
}

Vocabulary Vocabulary::from_sorted(std::vector<DrugId> codes) {
  if (codes.empty()) throw EmptyCorpusError("vocabulary is empty");
  for (std::size_t i = 1; i < codes.size(); ++i) {
    if (!(codes[i - 1] < codes[i])) {
      throw FormatError("vocabulary entries must be strictly increasing");
    }
  }
  Vocabulary v;
  v.entries_ = std::move(codes);
  v.index_.reserve(v.entries_.size());
  for (std::size_t i = 0; i < v.entries_.size(); ++i) {
    v.index_.emplace(v.entries_[i].code(), i);
  }
  return v;
}

std::optional<std::size_t> Vocabulary::index_of(const DrugId& drug) const {
  auto it = index_.find(drug.code());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::digest() const {
  std::string joined;
  for (const auto& d : entries_) {
    joined += d.code();
    joined += '\n';
  }
  return sha256_hex(joined);
}

Vocabulary build_vocabulary(std::span<const PharmacologicalProfile> profiles) {
  if (profiles.empty()) throw EmptyCorpusError("no profiles to build a vocabulary from");
  std::vector<DrugId> all;
  for (const auto& p : profiles) all.insert(all.end(), p.drugs.begin(), p.drugs.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return Vocabulary::from_sorted(std::move(all));
}

std::string profile_to_json_line(const PharmacologicalProfile& p) {
  std::vector<std::string> drugs;
  drugs.reserve(p.drugs.size());
  for (const auto& d : p.drugs) drugs.push_back(d.code());
  std::sort(drugs.begin(), drugs.end());
  ordered_json rec;
  rec["kind"] = "profile";
  rec["id"] = p.id();
  rec["hospitalization_id"] = p.hospitalization_id;
  rec["patient_id"] = p.patient_id;
  rec["department"] = to_string(p.department);
  rec["as_of"] = p.as_of.to_string();
  rec["drugs"] = drugs;
  if (p.label) rec["label"] = to_string(*p.label);
  return rec.dump();
}

PharmacologicalProfile profile_from_json_line(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  PharmacologicalProfile p;
  p.hospitalization_id = require_string(obj, "hospitalization_id", 0);
  p.patient_id = obj.value("patient_id", std::string{});
  p.department = parse_department(require_string(obj, "department", 0));
  p.as_of = require_date(obj, "as_of", 0);
  auto drugs = obj.find("drugs");
  if (drugs == obj.end() || !drugs->is_array() || drugs->empty()) {
    throw ParseError(0, "profile needs a non-empty 'drugs' array");
  }
  for (const auto& d : *drugs) {
    if (!d.is_string()) throw ParseError(0, "drug entries must be strings");
    p.drugs.emplace_back(d.get<std::string>());
  }
  std::sort(p.drugs.begin(), p.drugs.end());
  p.drugs.erase(std::unique(p.drugs.begin(), p.drugs.end()), p.drugs.end());
  auto label = obj.find("label");
  if (label != obj.end() && !label->is_null()) {
    p.label = parse_label(label->get<std::string>());
  }
  return p;
}

void write_profiles(std::ostream& out,
                    std::span<const PharmacologicalProfile> profiles) {
  for (const auto& p : profiles) out << profile_to_json_line(p) << '\n';
}

std::vector<PharmacologicalProfile> read_profiles(std::istream& in) {
  std::vector<PharmacologicalProfile> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(profile_from_json_line(line));
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

std::vector<PharmacologicalProfile> read_profiles_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open profile file '" + path + "'");
  return read_profiles(in);
}

}  // namespace rxsentinel::orders
