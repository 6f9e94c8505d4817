#include "rxsentinel/detectors/encoding.hpp"

#include <algorithm>

#include "rxsentinel/errors.hpp"

namespace rxsentinel::detectors {

std::vector<double> encode_multi_hot(const orders::PharmacologicalProfile& profile,
                                     const orders::Vocabulary& vocab, OovTally* tally) {
  std::vector<double> out(vocab.size(), 0.0);
  std::size_t dropped = 0;
  for (const auto& d : profile.drugs) {
    if (auto idx = vocab.index_of(d)) {
      out[*idx] = 1.0;
    } else {
      ++dropped;
    }
  }
  if (tally != nullptr && dropped > 0) {
    tally->dropped_drugs += dropped;
    ++tally->affected_profiles;
  }
  return out;
}

nn::Matrix encode_batch(std::span<const orders::PharmacologicalProfile> profiles,
                        const orders::Vocabulary& vocab, OovTally* tally) {
  nn::Matrix x = nn::Matrix::Zero(static_cast<Eigen::Index>(profiles.size()),
                                  static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t r = 0; r < profiles.size(); ++r) {
    std::size_t dropped = 0;
    for (const auto& d : profiles[r].drugs) {
      if (auto idx = vocab.index_of(d)) {
        x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(*idx)) = 1.0;
      } else {
        ++dropped;
      }
    }
    if (tally != nullptr && dropped > 0) {
      tally->dropped_drugs += dropped;
      ++tally->affected_profiles;
    }
  }
  return x;
}

std::vector<orders::DrugId> flag_low_probability(std::span<const double> probabilities,
                                                 const orders::PharmacologicalProfile& profile,
                                                 const orders::Vocabulary& vocab, double cut) {
  if (probabilities.size() != vocab.size()) {
    throw DimensionError("probability vector does not match vocabulary");
  }
  std::vector<orders::DrugId> flagged;
  for (const auto& d : profile.drugs) {
    if (auto idx = vocab.index_of(d); idx && probabilities[*idx] < cut) flagged.push_back(d);
  }
  return flagged;
}

double weakest_drug_score(std::span<const double> probabilities,
                          const orders::PharmacologicalProfile& profile,
                          const orders::Vocabulary& vocab) {
  double score = 0.0;
  for (const auto& d : profile.drugs) {
    if (auto idx = vocab.index_of(d)) score = std::max(score, 1.0 - probabilities[*idx]);
  }
  return score;
}

}  // namespace rxsentinel::detectors
