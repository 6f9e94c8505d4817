#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rxsentinel/binary_io.hpp"
#include "rxsentinel/nn/adam.hpp"
#include "rxsentinel/nn/early_stop.hpp"
#include "rxsentinel/nn/mlp.hpp"
#include "rxsentinel/orders.hpp"
#include "rxsentinel/random.hpp"

namespace rxsentinel::detectors {

struct GanomalyArchitecture {
  std::size_t hidden = 256;
  std::size_t latent = 64;
  double dropout = 0.1;
  std::size_t extractor_hidden = 128;
  std::size_t extractor_features = 64;
};

struct GanomalyLossWeights {
  double contextual = 100.0;
  double adversarial = 2.0;
  double encoder = 1.0;
  double encoder_l1 = 0.8;
  double encoder_l2 = 0.2;

  /// Throws ConfigError unless every weight is positive and the two
  /// encoder mix weights sum to one.
  void validate() const;
};

struct GanomalyTrainConfig {
  double generator_learning_rate = 1e-3;
  double extractor_learning_rate = 1e-6;
  std::size_t batch_size = 256;
  nn::EarlyStopRule early_stop;
  std::size_t fixed_epochs = 21;
  std::size_t max_epochs = 200;
  double collapse_variance = 1e-8;
  GanomalyArchitecture architecture;
};

/// Encoder-decoder-encoder generator plus a feature extractor with its own
/// sigmoid head. Only the generator is needed for scoring.
struct GanomalyModel {
  nn::Mlp encoder1;
  nn::Mlp decoder;
  nn::Mlp encoder2;
  nn::Mlp extractor;  // V -> 128 -> 64, relu + batch norm
  nn::Mlp head;       // 64 -> 1 sigmoid

  std::size_t width() const { return encoder1.in(); }
};

GanomalyModel ganomaly_create(std::size_t vocab_size, const GanomalyArchitecture& arch,
                              Rng& rng);

/// Row-wise l1_weight * mean|a - b| + l2_weight * mean (a - b)^2.
std::vector<double> encoder_loss_rows(const nn::Matrix& z1, const nn::Matrix& z2,
                                      double l1_weight = 0.8, double l2_weight = 0.2);

struct GeneratorLosses {
  double contextual = 0.0;
  double adversarial = 0.0;
  double encoder = 0.0;
  double total = 0.0;
};

/// One generator forward and backward pass. Parameters are not changed.
struct GeneratorPass {
  GeneratorLosses losses;
  nn::Matrix reconstruction;
  std::vector<nn::LayerGrads> encoder1;
  std::vector<nn::LayerGrads> decoder;
  std::vector<nn::LayerGrads> encoder2;
};

/// Generator loss and its gradients with respect to encoder1, decoder and
/// encoder2. The extractor runs in `mode` as well but only passes gradients
/// through to the reconstruction.
GeneratorPass generator_pass(const GanomalyModel& m, const nn::Matrix& x,
                             const GanomalyLossWeights& w, nn::Mode mode, Rng& rng);

/// Loss values only, with every network in inference mode.
GeneratorLosses generator_losses(const GanomalyModel& m, const nn::Matrix& x,
                                 const GanomalyLossWeights& w);

struct GanomalyEpoch {
  std::size_t epoch = 0;
  GeneratorLosses train;
  double extractor_loss = 0.0;
  std::optional<double> validation_loss;
};

/// Stateful trainer. Each batch runs an extractor step followed by a
/// generator step; the two steps use separate optimizers and never touch
/// each other's parameters.
class GanomalyTrainer {
 public:
  GanomalyTrainer(std::size_t vocab_size, GanomalyTrainConfig cfg, GanomalyLossWeights w,
                  std::uint64_t seed);
  GanomalyTrainer(GanomalyModel model, GanomalyTrainConfig cfg, GanomalyLossWeights w,
                  std::uint64_t seed);

  /// Real/fake BCE on the head: x labeled 1, `fake` labeled 0. Updates the
  /// extractor, head and extractor running statistics. Returns the loss.
  double extractor_step(const nn::Matrix& x, const nn::Matrix& fake);

  /// Updates encoder1, decoder and encoder2 from `generator_pass`. Throws
  /// DegenerateError when the reconstruction batch collapses.
  GeneratorLosses generator_step(const nn::Matrix& x);

  /// Runs one epoch over shuffled batches of `train`.
  GanomalyEpoch run_epoch(const nn::Matrix& train, std::size_t epoch);

  const GanomalyModel& model() const { return model_; }
  GanomalyModel& model() { return model_; }
  Rng& rng() { return rng_; }

 private:
  GanomalyModel model_;
  GanomalyTrainConfig cfg_;
  GanomalyLossWeights weights_;
  Rng rng_;
  nn::AdamState generator_opt_;
  nn::AdamState extractor_opt_;
};

struct GanomalyTrainResult {
  GanomalyModel model;
  std::vector<GanomalyEpoch> history;
};

/// With `validation`, stops by the early-stop rule on the inference-mode
/// total generator loss; otherwise runs `fixed_epochs`.
GanomalyTrainResult ganomaly_train(const nn::Matrix& train, const nn::Matrix* validation,
                                   const GanomalyTrainConfig& cfg,
                                   const GanomalyLossWeights& w, std::uint64_t seed);

/// Inference-mode encoder loss per row of multi-hot inputs.
std::vector<double> encoder_loss_scores(const GanomalyModel& m, const nn::Matrix& x,
                                        const GanomalyLossWeights& w = {});
double encoder_loss_score(const GanomalyModel& m, const orders::PharmacologicalProfile& profile,
                          const orders::Vocabulary& vocab, const GanomalyLossWeights& w = {});

/// Inference-mode decoder probabilities.
nn::Matrix ganomaly_reconstruct_batch(const GanomalyModel& m, const nn::Matrix& x);

struct DrugScores {
  std::vector<double> probabilities;
  std::vector<orders::DrugId> flagged;
};

DrugScores ganomaly_per_drug_scores(const GanomalyModel& m,
                                    const orders::PharmacologicalProfile& profile,
                                    const orders::Vocabulary& vocab, double cut = 0.5);

void write_ganomaly(ByteWriter& out, const GanomalyModel& m);
GanomalyModel read_ganomaly(ByteReader& in);

}  // namespace rxsentinel::detectors
