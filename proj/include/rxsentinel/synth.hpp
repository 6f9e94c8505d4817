#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rxsentinel/orders.hpp"

namespace rxsentinel::synth {

struct DepartmentSpec {
  orders::Department department{};
  std::size_t protocol_count = 4;
  double protocol_adherence = 0.8;  // keep probability per template drug
  double weight = 1.0;              // relative share of hospitalizations
  double extra_drugs_mean = 1.0;    // Poisson mean of long-tail additions
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int first_year = 2009;
  int last_year = 2018;
  std::size_t vocab_size = 1200;
  std::size_t hospitalizations_per_year = 300;
  std::vector<DepartmentSpec> departments;
  double anomaly_rate = 0.05;

  // Shape of the generated patterns.
  std::size_t template_min = 9;  // protocol template size range, within [3, 15]
  std::size_t template_max = 15;
  double shared_fraction = 0.05;  // vocabulary share common to all departments
  double tail_exponent = 1.2;     // Zipf exponent of the long-tail draw
  double mean_stay_days = 6.0;
  double late_start_probability = 0.15;  // template order starts after admission
  double early_stop_probability = 0.15;  // template order stops before discharge
  double open_end_probability = 0.1;   // order written without an end date
  double readmission_probability = 0.1;
};

/// Eight departments with protocolized (nicu, obgyn, nursery) and long-tail
/// (oncology, general_ped) patterns. Profiles average roughly 9-10 drugs.
SynthConfig default_config(std::uint64_t seed = 1);

/// The desk-scale evaluation corpus: 600 drugs, about 20,000 profiles,
/// 10% planted orders.
SynthConfig acceptance_config(std::uint64_t seed = 20200401);

/// Throws ConfigError for inconsistent settings.
void validate(const SynthConfig& cfg);

struct GroundTruth {
  std::vector<bool> order_atypical;  // indexed by OrderEvent::source_index
};

struct Corpus {
  orders::OrderLog log;
  GroundTruth truth;
};

/// Deterministic given cfg.seed.
Corpus generate_corpus(const SynthConfig& cfg);

/// Bernoulli(rate) selection over orders; each selected order gets a drug
/// from another department's pool or one of the globally rarest drugs.
/// `log` is left untouched.
Corpus inject_anomalies(const orders::OrderLog& log, double rate,
                        std::uint64_t seed);

/// A profile is atypical iff any order active on its day is planted.
std::vector<orders::Label> profile_truth(
    const orders::ReconstructedProfiles& profiles, const GroundTruth& truth);

/// Reconstructs profiles and attaches ground-truth labels.
std::vector<orders::PharmacologicalProfile> labeled_profiles(const Corpus& corpus);

/// Line-delimited `{"order":i,"atypical":b}`.
void write_ground_truth(std::ostream& out, const GroundTruth& truth);
GroundTruth read_ground_truth(std::istream& in);

}  // namespace rxsentinel::synth
