#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rxsentinel/binary_io.hpp"
#include "rxsentinel/nn/early_stop.hpp"
#include "rxsentinel/nn/mlp.hpp"
#include "rxsentinel/orders.hpp"

namespace rxsentinel::detectors {

inline constexpr double kDefaultDrugCut = 0.5;

struct AeArchitecture {
  std::size_t hidden = 256;
  std::size_t latent = 64;
  double dropout = 0.1;
};

struct AeTrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  nn::EarlyStopRule early_stop;
  std::size_t fixed_epochs = 11;  // used when no validation set is given
  std::size_t max_epochs = 200;   // cap under early stopping
  AeArchitecture architecture;
};

/// V -> hidden -> latent encoder and latent -> hidden -> V decoder with a
/// sigmoid output; relu hidden units, dropout after each hidden-width layer.
struct AutoencoderModel {
  nn::Mlp encoder;
  nn::Mlp decoder;

  std::size_t width() const { return encoder.in(); }
};

struct AeEpoch {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> validation_loss;
};

struct AeTrainResult {
  AutoencoderModel model;
  std::vector<AeEpoch> history;
};

AutoencoderModel ae_create(std::size_t vocab_size, const AeArchitecture& arch, Rng& rng);

/// BCE reconstruction training with Adam. With `validation`, stops by the
/// early-stop rule on validation loss; otherwise runs `fixed_epochs`.
/// Throws EmptyCorpusError for an empty set and NumericError when the loss
/// stops being finite.
AeTrainResult ae_train(const nn::Matrix& train, const nn::Matrix* validation,
                       const AeTrainConfig& cfg, std::uint64_t seed);

/// Inference-mode reconstruction probabilities, one row per input row.
nn::Matrix ae_reconstruct_batch(const AutoencoderModel& m, const nn::Matrix& x);
std::vector<double> ae_reconstruct(const AutoencoderModel& m,
                                   const orders::PharmacologicalProfile& profile,
                                   const orders::Vocabulary& vocab);

/// Drugs present in the profile whose reconstructed probability is below `cut`.
std::vector<orders::DrugId> ae_flag_orders(std::span<const double> probabilities,
                                           const orders::PharmacologicalProfile& profile,
                                           const orders::Vocabulary& vocab,
                                           double cut = kDefaultDrugCut);

/// Mean over profiles of |R & P| / |P|, R = drugs reconstructed with p >= 0.5.
double reconstruction_accuracy(const AutoencoderModel& m,
                               std::span<const orders::PharmacologicalProfile> profiles,
                               const orders::Vocabulary& vocab);

/// Same statistic from precomputed probabilities and inputs.
double reconstruction_accuracy(const nn::Matrix& probabilities, const nn::Matrix& inputs);

void write_autoencoder(ByteWriter& out, const AutoencoderModel& m);
AutoencoderModel read_autoencoder(ByteReader& in);

}  // namespace rxsentinel::detectors
