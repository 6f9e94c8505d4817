#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rxsentinel/binary_io.hpp"
#include "rxsentinel/orders.hpp"

namespace rxsentinel::baselines {

/// Occurrence count of every exact drug set seen in training.
struct FrequencyModel {
  std::unordered_map<std::string, std::uint64_t> counts;
};

inline constexpr double kUnseenProfileScore = std::numeric_limits<double>::infinity();

/// Order-insensitive key: sorted, de-duplicated codes joined by spaces.
std::string profile_key(std::span<const orders::DrugId> drugs);

FrequencyModel freq_fit(std::span<const orders::PharmacologicalProfile> profiles);

/// 1 / count for seen profiles, +infinity for unseen ones.
double freq_score(const FrequencyModel& model, const orders::PharmacologicalProfile& profile);

/// Keys are written in sorted order so the bytes are stable.
void write_frequency(ByteWriter& out, const FrequencyModel& model);
FrequencyModel read_frequency(ByteReader& in);

}  // namespace rxsentinel::baselines
