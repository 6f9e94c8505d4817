#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rxsentinel/orders.hpp"

namespace rxsentinel::service {

/// One line of a score file. Infinite scores are written as "Infinity".
struct ScoreRecord {
  std::string profile_id;
  std::string hospitalization_id;
  orders::Department department{};
  double score = 0.0;
  std::optional<orders::Label> label;  // the class, when thresholds were given
  std::optional<std::vector<std::string>> flags;
  std::size_t oov = 0;
  std::string artifact_digest;
};

std::string score_record_to_json_line(const ScoreRecord& r);
ScoreRecord score_record_from_json_line(std::string_view line);

void write_score_records(std::ostream& out, std::span<const ScoreRecord> records);
std::vector<ScoreRecord> read_score_records(std::istream& in);
std::vector<ScoreRecord> read_score_file(const std::string& path);

}  // namespace rxsentinel::service
