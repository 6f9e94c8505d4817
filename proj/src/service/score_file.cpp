#include "rxsentinel/service/score_file.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "rxsentinel/errors.hpp"

namespace rxsentinel::service {

std::string score_record_to_json_line(const ScoreRecord& r) {
  nlohmann::ordered_json j;
  j["kind"] = "score";
  j["profile_id"] = r.profile_id;
  j["hospitalization_id"] = r.hospitalization_id;
  j["department"] = std::string(orders::to_string(r.department));
  if (std::isinf(r.score) && r.score > 0) {
    j["score"] = "Infinity";
  } else if (std::isfinite(r.score)) {
    j["score"] = r.score;
  } else {
    throw NumericError("score for " + r.profile_id + " is not representable");
  }
  if (r.label) j["class"] = std::string(orders::to_string(*r.label));
  if (r.flags) j["flags"] = *r.flags;
  j["oov"] = r.oov;
  j["artifact_digest"] = r.artifact_digest;
  return j.dump();
}

ScoreRecord score_record_from_json_line(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  ScoreRecord r;
  r.profile_id = j.at("profile_id").get<std::string>();
  r.hospitalization_id = j.at("hospitalization_id").get<std::string>();
  r.department = orders::parse_department(j.at("department").get<std::string>());
  const auto& s = j.at("score");
  if (s.is_string()) {
    if (s.get<std::string>() != "Infinity") throw FormatError("unknown score token");
    r.score = std::numeric_limits<double>::infinity();
  } else {
    r.score = s.get<double>();
  }
  if (j.contains("class")) r.label = orders::parse_label(j.at("class").get<std::string>());
  if (j.contains("flags")) r.flags = j.at("flags").get<std::vector<std::string>>();
  r.oov = j.at("oov").get<std::size_t>();
  r.artifact_digest = j.at("artifact_digest").get<std::string>();
  return r;
}

void write_score_records(std::ostream& out, std::span<const ScoreRecord> records) {
  for (const auto& r : records) out << score_record_to_json_line(r) << "\n";
}

std::vector<ScoreRecord> read_score_records(std::istream& in) {
  std::vector<ScoreRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(score_record_from_json_line(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

std::vector<ScoreRecord> read_score_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return read_score_records(in);
}

}  // namespace rxsentinel::service
