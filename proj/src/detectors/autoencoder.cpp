#include "rxsentinel/detectors/autoencoder.hpp"

#include <cmath>

#include "rxsentinel/detectors/encoding.hpp"
#include "rxsentinel/detectors/training.hpp"
#include "rxsentinel/errors.hpp"
#include "rxsentinel/nn/adam.hpp"
#include "rxsentinel/nn/loss.hpp"
#include "rxsentinel/nn/serialize.hpp"

namespace rxsentinel::detectors {

using nn::Activation;
using nn::LayerSpec;

AutoencoderModel ae_create(std::size_t vocab_size, const AeArchitecture& arch, Rng& rng) {
  const LayerSpec enc[] = {{arch.hidden, Activation::relu, arch.dropout, false},
                           {arch.latent, Activation::relu, 0.0, false}};
  const LayerSpec dec[] = {{arch.hidden, Activation::relu, arch.dropout, false},
                           {vocab_size, Activation::sigmoid, 0.0, false}};
  AutoencoderModel m;
  m.encoder = nn::Mlp::create(vocab_size, enc, rng);
  m.decoder = nn::Mlp::create(arch.latent, dec, rng);
  return m;
}

namespace {

double inference_loss(const AutoencoderModel& m, const nn::Matrix& x) {
  return nn::loss_bce(ae_reconstruct_batch(m, x), x).value;
}

}  // namespace

AeTrainResult ae_train(const nn::Matrix& train, const nn::Matrix* validation,
                       const AeTrainConfig& cfg, std::uint64_t seed) {
  if (train.rows() == 0) throw EmptyCorpusError("autoencoder: empty training set");
  if (cfg.batch_size == 0) throw ConfigError("autoencoder: batch size must be positive");
  if (validation != nullptr && validation->cols() != train.cols()) {
    throw DimensionError("autoencoder: validation width differs from training width");
  }
  Rng rng(seed);
  AeTrainResult result;
  AutoencoderModel& m = result.model;
  m = ae_create(static_cast<std::size_t>(train.cols()), cfg.architecture, rng);

  nn::AdamState adam;
  adam.learning_rate = cfg.learning_rate;
  const bool early = validation != nullptr && validation->rows() > 0;
  const std::size_t epochs = early ? cfg.max_epochs : cfg.fixed_epochs;
  std::vector<double> validation_history;

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    double weighted = 0.0;
    std::size_t seen = 0;
    std::size_t batch_no = 0;
    for (const auto& rows : shuffled_batches(static_cast<std::size_t>(train.rows()),
                                             cfg.batch_size, rng)) {
      ++batch_no;
      const nn::Matrix x = gather_rows(train, rows);
      const nn::MlpOutput enc = nn::forward(m.encoder, x, nn::Mode::train, rng);
      const nn::MlpOutput dec = nn::forward(m.decoder, enc.y, nn::Mode::train, rng);
      const nn::Loss loss = nn::loss_bce(dec.y, x);
      if (!std::isfinite(loss.value)) {
        throw NumericError("autoencoder: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_no));
      }
      const nn::MlpBackward dback = nn::backward(m.decoder, dec, loss.grad);
      const nn::MlpBackward eback = nn::backward(m.encoder, enc, dback.dx);

      auto params = nn::parameters(m.encoder, "encoder");
      auto dparams = nn::parameters(m.decoder, "decoder");
      params.insert(params.end(), dparams.begin(), dparams.end());
      auto grads = nn::gradients(eback.grads, m.encoder, "encoder");
      auto dgrads = nn::gradients(dback.grads, m.decoder, "decoder");
      grads.insert(grads.end(), dgrads.begin(), dgrads.end());
      nn::adam_step(adam, params, grads);

      weighted += loss.value * static_cast<double>(rows.size());
      seen += rows.size();
    }
    AeEpoch log{epoch, weighted / static_cast<double>(seen), std::nullopt};
    if (early) {
      const double v = inference_loss(m, *validation);
      if (!std::isfinite(v)) {
        throw NumericError("autoencoder: non-finite validation loss at epoch " +
                           std::to_string(epoch));
      }
      log.validation_loss = v;
      validation_history.push_back(v);
    }
    result.history.push_back(log);
    if (early && nn::check_early_stop(cfg.early_stop, validation_history)) break;
  }
  return result;
}

nn::Matrix ae_reconstruct_batch(const AutoencoderModel& m, const nn::Matrix& x) {
  return nn::predict(m.decoder, nn::predict(m.encoder, x));
}

std::vector<double> ae_reconstruct(const AutoencoderModel& m,
                                   const orders::PharmacologicalProfile& profile,
                                   const orders::Vocabulary& vocab) {
  const std::vector<double> x = encode_multi_hot(profile, vocab);
  const nn::Matrix in = Eigen::Map<const nn::Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  const nn::Matrix p = ae_reconstruct_batch(m, in);
  return {p.data(), p.data() + p.size()};
}

std::vector<orders::DrugId> ae_flag_orders(std::span<const double> probabilities,
                                           const orders::PharmacologicalProfile& profile,
                                           const orders::Vocabulary& vocab, double cut) {
  return flag_low_probability(probabilities, profile, vocab, cut);
}

double reconstruction_accuracy(const nn::Matrix& probabilities, const nn::Matrix& inputs) {
  if (probabilities.rows() != inputs.rows() || probabilities.cols() != inputs.cols()) {
    throw DimensionError("reconstruction_accuracy: shape mismatch");
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    std::size_t present = 0;
    std::size_t recovered = 0;
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
      if (inputs(r, c) > 0.5) {
        ++present;
        if (probabilities(r, c) >= 0.5) ++recovered;
      }
    }
    if (present == 0) continue;
    total += static_cast<double>(recovered) / static_cast<double>(present);
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

double reconstruction_accuracy(const AutoencoderModel& m,
                               std::span<const orders::PharmacologicalProfile> profiles,
                               const orders::Vocabulary& vocab) {
  if (profiles.empty()) throw EmptyCorpusError("reconstruction_accuracy: no profiles");
  const nn::Matrix x = encode_batch(profiles, vocab);
  return reconstruction_accuracy(ae_reconstruct_batch(m, x), x);
}

void write_autoencoder(ByteWriter& out, const AutoencoderModel& m) {
  nn::write_mlp(out, m.encoder);
  nn::write_mlp(out, m.decoder);
}

AutoencoderModel read_autoencoder(ByteReader& in) {
  AutoencoderModel m;
  m.encoder = nn::read_mlp(in);
  m.decoder = nn::read_mlp(in);
  if (m.encoder.out() != m.decoder.in() || m.decoder.out() != m.encoder.in()) {
    throw FormatError("autoencoder: encoder/decoder widths do not match");
  }
  return m;
}

}  // namespace rxsentinel::detectors
