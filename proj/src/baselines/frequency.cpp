#include "rxsentinel/baselines/frequency.hpp"

#include <algorithm>

#include "rxsentinel/errors.hpp"

namespace rxsentinel::baselines {

std::string profile_key(std::span<const orders::DrugId> drugs) {
  std::vector<const std::string*> codes;
  codes.reserve(drugs.size());
  for (const auto& d : drugs) codes.push_back(&d.code());
  std::sort(codes.begin(), codes.end(), [](auto* a, auto* b) { return *a < *b; });
  codes.erase(std::unique(codes.begin(), codes.end(), [](auto* a, auto* b) { return *a == *b; }),
              codes.end());
  std::string key;
  for (const auto* c : codes) {
    if (!key.empty()) key.push_back(' ');
    key += *c;
  }
  return key;
}

FrequencyModel freq_fit(std::span<const orders::PharmacologicalProfile> profiles) {
  if (profiles.empty()) throw EmptyCorpusError("frequency model needs training profiles");
  FrequencyModel m;
  for (const auto& p : profiles) ++m.counts[profile_key(p.drugs)];
  return m;
}

double freq_score(const FrequencyModel& model, const orders::PharmacologicalProfile& profile) {
  auto it = model.counts.find(profile_key(profile.drugs));
  if (it == model.counts.end()) return kUnseenProfileScore;
  return 1.0 / static_cast<double>(it->second);
}

void write_frequency(ByteWriter& out, const FrequencyModel& model) {
  std::vector<std::pair<std::string, std::uint64_t>> entries(model.counts.begin(),
                                                             model.counts.end());
  std::sort(entries.begin(), entries.end());
  out.u64(entries.size());
  for (const auto& [key, count] : entries) {
    out.str(key);
    out.u64(count);
  }
}

FrequencyModel read_frequency(ByteReader& in) {
  FrequencyModel m;
  const std::uint64_t n = in.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string key = in.str();
    const std::uint64_t count = in.u64();
    if (count == 0) throw FormatError("frequency entry with zero count");
    m.counts.emplace(std::move(key), count);
  }
  return m;
}

}  // namespace rxsentinel::baselines
