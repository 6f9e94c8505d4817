#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rxsentinel/date.hpp"

namespace rxsentinel::orders {

enum class Department : std::uint8_t {
  obgyn,
  general_ped,
  surgery,
  oncology,
  specialized_ped,
  nicu,
  nursery,
  picu,
};

inline constexpr std::array<Department, 8> kAllDepartments = {
    Department::obgyn,    Department::general_ped,     Department::surgery,
    Department::oncology, Department::specialized_ped, Department::nicu,
    Department::nursery,  Department::picu,
};

std::string_view to_string(Department d);
/// Throws ParseError for tokens outside the closed set.
Department parse_department(std::string_view token);

/// Drug plus dosage form, as a database identifier token.
class DrugId {
 public:
  /// Rejects empty codes and codes containing whitespace.
  explicit DrugId(std::string code);

  const std::string& code() const noexcept { return code_; }

  friend auto operator<=>(const DrugId&, const DrugId&) = default;
  friend bool operator==(const DrugId&, const DrugId&) = default;

 private:
  std::string code_;
};

struct Hospitalization {
  std::string id;
  std::string patient_id;
  Department department{};
  Date admission_date;
};

struct OrderEvent {
  std::string hospitalization_id;
  DrugId drug;
  Date start;
  std::optional<Date> end;
  // Position among the order records of the source log; keys the
  // ground-truth sidecar.
  std::size_t source_index = 0;
};

enum class Label : std::uint8_t { typical, atypical };

std::string_view to_string(Label l);
Label parse_label(std::string_view token);

struct PharmacologicalProfile {
  std::string hospitalization_id;
  std::string patient_id;
  Department department{};
  Date as_of;
  std::vector<DrugId> drugs;  // sorted, unique
  std::optional<Label> label;

  /// Stable identifier `<hospitalization_id>@<YYYY-MM-DD>`.
  std::string id() const;
};

struct OrderLog {
  std::vector<Hospitalization> hospitalizations;
  std::vector<OrderEvent> orders;
};

/// Parses the line-delimited order log. Events come back sorted by
/// (hospitalization_id, start), ties in source order.
OrderLog ingest_orders(std::istream& source);
OrderLog ingest_orders_file(const std::string& path);

/// Writes hospitalization records, then order records in source_index order.
void write_order_log(std::ostream& out, const OrderLog& log);

struct ReconstructedProfiles {
  std::vector<PharmacologicalProfile> profiles;
  // For each profile, source indices of the orders active on its day.
  std::vector<std::vector<std::size_t>> active_orders;
};

/// Daily active-set snapshots, suppressing days whose set equals the
/// previous day's. Open-ended orders stay active until the last event day of
/// their hospitalization.
std::vector<PharmacologicalProfile> reconstruct_profiles(
    std::span<const OrderEvent> events,
    std::span<const Hospitalization> hosps);

ReconstructedProfiles reconstruct_profiles_with_sources(
    std::span<const OrderEvent> events,
    std::span<const Hospitalization> hosps);

/// Year a hospitalization (and every one of its profiles) is attributed to.
int hospitalization_year(const Hospitalization& h);

/// Ordered bijection between drugs and dense indices, lexicographic.
class Vocabulary {
 public:
  /// Throws unless `codes` are non-empty, unique and sorted.
  static Vocabulary from_sorted(std::vector<DrugId> codes);

  std::size_t size() const noexcept { return entries_.size(); }
  std::optional<std::size_t> index_of(const DrugId& drug) const;
  const DrugId& drug(std::size_t index) const { return entries_.at(index); }
  std::span<const DrugId> entries() const noexcept { return entries_; }

  /// SHA-256 over the ordered codes, hex encoded.
  std::string digest() const;

 private:
  std::vector<DrugId> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Throws EmptyCorpusError on empty input.
Vocabulary build_vocabulary(std::span<const PharmacologicalProfile> profiles);

/// One JSON line (no trailing newline), keys in fixed order, drugs sorted.
std::string profile_to_json_line(const PharmacologicalProfile& p);
PharmacologicalProfile profile_from_json_line(std::string_view line);

void write_profiles(std::ostream& out,
                    std::span<const PharmacologicalProfile> profiles);
std::vector<PharmacologicalProfile> read_profiles(std::istream& in);
std::vector<PharmacologicalProfile> read_profiles_file(const std::string& path);

}  // namespace rxsentinel::orders
