#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rxsentinel/nn/matrix.hpp"
#include "rxsentinel/orders.hpp"

namespace rxsentinel::detectors {

/// Drugs missing from the vocabulary during one encoding run.
struct OovTally {
  std::size_t dropped_drugs = 0;
  std::size_t affected_profiles = 0;
};

/// Length-V 0/1 vector; out-of-vocabulary drugs are dropped and counted.
std::vector<double> encode_multi_hot(const orders::PharmacologicalProfile& profile,
                                     const orders::Vocabulary& vocab,
                                     OovTally* tally = nullptr);

nn::Matrix encode_batch(std::span<const orders::PharmacologicalProfile> profiles,
                        const orders::Vocabulary& vocab, OovTally* tally = nullptr);

/// Present, in-vocabulary drugs whose probability is below `cut`.
std::vector<orders::DrugId> flag_low_probability(std::span<const double> probabilities,
                                                 const orders::PharmacologicalProfile& profile,
                                                 const orders::Vocabulary& vocab, double cut);

/// Largest 1 - p over present drugs; 0 when none is in the vocabulary.
double weakest_drug_score(std::span<const double> probabilities,
                          const orders::PharmacologicalProfile& profile,
                          const orders::Vocabulary& vocab);

}  // namespace rxsentinel::detectors
