#include "rxsentinel/detectors/ganomaly.hpp"

#include <cmath>
#include <sstream>

#include "rxsentinel/detectors/encoding.hpp"
#include "rxsentinel/detectors/training.hpp"
#include "rxsentinel/errors.hpp"
#include "rxsentinel/nn/loss.hpp"
#include "rxsentinel/nn/serialize.hpp"

namespace rxsentinel::detectors {

using nn::Activation;
using nn::LayerSpec;
using nn::Matrix;
using nn::Mode;

void GanomalyLossWeights::validate() const {
  if (!(contextual > 0.0 && adversarial > 0.0 && encoder > 0.0 && encoder_l1 > 0.0 &&
        encoder_l2 > 0.0)) {
    throw ConfigError("ganomaly: loss weights must be positive");
  }
  if (std::abs(encoder_l1 + encoder_l2 - 1.0) > 1e-12) {
    throw ConfigError("ganomaly: encoder loss mix must sum to 1");
  }
}

GanomalyModel ganomaly_create(std::size_t vocab_size, const GanomalyArchitecture& arch,
                              Rng& rng) {
  const LayerSpec enc[] = {{arch.hidden, Activation::selu, arch.dropout, false},
                           {arch.latent, Activation::selu, 0.0, false}};
  const LayerSpec dec[] = {{arch.hidden, Activation::selu, arch.dropout, false},
                           {vocab_size, Activation::sigmoid, 0.0, false}};
  const LayerSpec fe[] = {{arch.extractor_hidden, Activation::relu, 0.0, true},
                          {arch.extractor_features, Activation::relu, 0.0, true}};
  const LayerSpec head[] = {{1, Activation::sigmoid, 0.0, false}};
  GanomalyModel m;
  m.encoder1 = nn::Mlp::create(vocab_size, enc, rng);
  m.decoder = nn::Mlp::create(arch.latent, dec, rng);
  m.encoder2 = nn::Mlp::create(vocab_size, enc, rng);
  m.extractor = nn::Mlp::create(vocab_size, fe, rng);
  m.head = nn::Mlp::create(arch.extractor_features, head, rng);
  return m;
}

std::vector<double> encoder_loss_rows(const Matrix& z1, const Matrix& z2, double l1_weight,
                                      double l2_weight) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols() || z1.cols() == 0) {
    throw DimensionError("encoder loss: latent shapes differ");
  }
  const Eigen::ArrayXXd d = (z1 - z2).array();
  const double width = static_cast<double>(z1.cols());
  std::vector<double> out(static_cast<std::size_t>(z1.rows()));
  for (Eigen::Index r = 0; r < d.rows(); ++r) {
    out[static_cast<std::size_t>(r)] = l1_weight * d.row(r).abs().sum() / width +
                                       l2_weight * d.row(r).square().sum() / width;
  }
  return out;
}

namespace {

double combine(const GanomalyLossWeights& w, GeneratorLosses& l) {
  l.total = w.contextual * l.contextual + w.adversarial * l.adversarial + w.encoder * l.encoder;
  return l.total;
}

void require_finite(const GeneratorLosses& l, const std::string& where) {
  if (!std::isfinite(l.total)) {
    std::ostringstream msg;
    msg << "ganomaly: non-finite generator loss " << where << " (contextual " << l.contextual
        << ", adversarial " << l.adversarial << ", encoder " << l.encoder << ")";
    throw NumericError(msg.str());
  }
}

std::vector<nn::ParamBlock> generator_parameters(GanomalyModel& m) {
  auto p = nn::parameters(m.encoder1, "encoder1");
  auto d = nn::parameters(m.decoder, "decoder");
  auto e = nn::parameters(m.encoder2, "encoder2");
  p.insert(p.end(), d.begin(), d.end());
  p.insert(p.end(), e.begin(), e.end());
  return p;
}

}  // namespace

GeneratorPass generator_pass(const GanomalyModel& m, const Matrix& x,
                             const GanomalyLossWeights& w, Mode mode, Rng& rng) {
  const nn::MlpOutput e1 = nn::forward(m.encoder1, x, mode, rng);
  const nn::MlpOutput dec = nn::forward(m.decoder, e1.y, mode, rng);
  const nn::MlpOutput e2 = nn::forward(m.encoder2, dec.y, mode, rng);

  GeneratorPass out;
  const nn::Loss con = nn::loss_bce(dec.y, x);

  const nn::MlpOutput f_real = nn::forward(m.extractor, x, mode, rng);
  const nn::MlpOutput f_fake = nn::forward(m.extractor, dec.y, mode, rng);
  const nn::Loss adv = nn::loss_l2(f_fake.y, f_real.y);
  const Matrix dfake_adv = nn::backward(m.extractor, f_fake, adv.grad).dx;

  const nn::Loss l1 = nn::loss_l1(e1.y, e2.y);
  const nn::Loss l2 = nn::loss_l2(e1.y, e2.y);
  const Matrix dz1_enc = w.encoder_l1 * l1.grad + w.encoder_l2 * l2.grad;

  out.losses.contextual = con.value;
  out.losses.adversarial = adv.value;
  out.losses.encoder = w.encoder_l1 * l1.value + w.encoder_l2 * l2.value;
  combine(w, out.losses);

  // Both distance terms are antisymmetric, so d/dz2 = -d/dz1.
  const nn::MlpBackward b2 = nn::backward(m.encoder2, e2, -w.encoder * dz1_enc);
  const Matrix dxhat = w.contextual * con.grad + w.adversarial * dfake_adv + b2.dx;
  const nn::MlpBackward bd = nn::backward(m.decoder, dec, dxhat);
  const nn::MlpBackward b1 = nn::backward(m.encoder1, e1, bd.dx + w.encoder * dz1_enc);

  out.reconstruction = dec.y;
  out.encoder1 = b1.grads;
  out.decoder = bd.grads;
  out.encoder2 = b2.grads;
  return out;
}

GeneratorLosses generator_losses(const GanomalyModel& m, const Matrix& x,
                                 const GanomalyLossWeights& w) {
  const Matrix z1 = nn::predict(m.encoder1, x);
  const Matrix xhat = nn::predict(m.decoder, z1);
  const Matrix z2 = nn::predict(m.encoder2, xhat);
  GeneratorLosses l;
  l.contextual = nn::loss_bce(xhat, x).value;
  l.adversarial = nn::loss_l2(nn::predict(m.extractor, xhat), nn::predict(m.extractor, x)).value;
  l.encoder = w.encoder_l1 * nn::loss_l1(z1, z2).value + w.encoder_l2 * nn::loss_l2(z1, z2).value;
  combine(w, l);
  return l;
}

GanomalyTrainer::GanomalyTrainer(std::size_t vocab_size, GanomalyTrainConfig cfg,
                                 GanomalyLossWeights w, std::uint64_t seed)
    : cfg_(cfg), weights_(w), rng_(seed) {
  weights_.validate();
  model_ = ganomaly_create(vocab_size, cfg_.architecture, rng_);
  generator_opt_.learning_rate = cfg_.generator_learning_rate;
  extractor_opt_.learning_rate = cfg_.extractor_learning_rate;
}

GanomalyTrainer::GanomalyTrainer(GanomalyModel model, GanomalyTrainConfig cfg,
                                 GanomalyLossWeights w, std::uint64_t seed)
    : model_(std::move(model)), cfg_(cfg), weights_(w), rng_(seed) {
  weights_.validate();
  generator_opt_.learning_rate = cfg_.generator_learning_rate;
  extractor_opt_.learning_rate = cfg_.extractor_learning_rate;
}

double GanomalyTrainer::extractor_step(const Matrix& x, const Matrix& fake) {
  const nn::MlpOutput f_real = nn::forward(model_.extractor, x, Mode::train, rng_);
  const nn::MlpOutput h_real = nn::forward(model_.head, f_real.y, Mode::train, rng_);
  const nn::MlpOutput f_fake = nn::forward(model_.extractor, fake, Mode::train, rng_);
  const nn::MlpOutput h_fake = nn::forward(model_.head, f_fake.y, Mode::train, rng_);

  const nn::Loss real = nn::loss_bce(h_real.y, Matrix::Ones(h_real.y.rows(), 1));
  const nn::Loss fk = nn::loss_bce(h_fake.y, Matrix::Zero(h_fake.y.rows(), 1));
  const double value = 0.5 * real.value + 0.5 * fk.value;
  if (!std::isfinite(value)) throw NumericError("ganomaly: non-finite extractor loss");

  const nn::MlpBackward hr = nn::backward(model_.head, h_real, 0.5 * real.grad);
  const nn::MlpBackward hf = nn::backward(model_.head, h_fake, 0.5 * fk.grad);
  nn::MlpBackward fr = nn::backward(model_.extractor, f_real, hr.dx);
  const nn::MlpBackward ff = nn::backward(model_.extractor, f_fake, hf.dx);
  std::vector<nn::LayerGrads> head_grads = hr.grads;
  nn::accumulate(head_grads, hf.grads);
  nn::accumulate(fr.grads, ff.grads);

  auto params = nn::parameters(model_.extractor, "extractor");
  auto hp = nn::parameters(model_.head, "head");
  params.insert(params.end(), hp.begin(), hp.end());
  auto grads = nn::gradients(fr.grads, model_.extractor, "extractor");
  auto hg = nn::gradients(head_grads, model_.head, "head");
  grads.insert(grads.end(), hg.begin(), hg.end());
  nn::adam_step(extractor_opt_, params, grads);
  nn::update_running_stats(model_.extractor, f_real);
  return value;
}

GeneratorLosses GanomalyTrainer::generator_step(const Matrix& x) {
  const GeneratorPass pass = generator_pass(model_, x, weights_, Mode::train, rng_);
  require_finite(pass.losses, "in generator step");
  if (x.rows() >= 2) {
    const double input_var = mean_column_variance(x);
    const double recon_var = mean_column_variance(pass.reconstruction);
    if (input_var >= cfg_.collapse_variance && recon_var < cfg_.collapse_variance) {
      std::ostringstream msg;
      msg << "ganomaly: mode collapse, reconstruction batch variance " << recon_var
          << " against input variance " << input_var;
      throw DegenerateError(msg.str());
    }
  }
  auto params = generator_parameters(model_);
  auto grads = nn::gradients(pass.encoder1, model_.encoder1, "encoder1");
  auto dg = nn::gradients(pass.decoder, model_.decoder, "decoder");
  auto eg = nn::gradients(pass.encoder2, model_.encoder2, "encoder2");
  grads.insert(grads.end(), dg.begin(), dg.end());
  grads.insert(grads.end(), eg.begin(), eg.end());
  nn::adam_step(generator_opt_, params, grads);
  return pass.losses;
}

GanomalyEpoch GanomalyTrainer::run_epoch(const Matrix& train, std::size_t epoch) {
  GanomalyEpoch log;
  log.epoch = epoch;
  double seen = 0.0;
  std::size_t batch_no = 0;
  for (const auto& rows :
       shuffled_batches(static_cast<std::size_t>(train.rows()), cfg_.batch_size, rng_)) {
    ++batch_no;
    const Matrix x = gather_rows(train, rows);
    // The fake batch comes from a train-mode generator pass; the generator
    // step below draws its own dropout masks.
    Rng fake_rng = rng_.fork();
    const Matrix fake = nn::forward(model_.decoder,
                                    nn::forward(model_.encoder1, x, Mode::train, fake_rng).y,
                                    Mode::train, fake_rng)
                            .y;
    const double n = static_cast<double>(rows.size());
    try {
      log.extractor_loss += n * extractor_step(x, fake);
      const GeneratorLosses l = generator_step(x);
      log.train.contextual += n * l.contextual;
      log.train.adversarial += n * l.adversarial;
      log.train.encoder += n * l.encoder;
    } catch (const DegenerateError& e) {
      throw DegenerateError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_no));
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(batch_no));
    }
    seen += n;
  }
  log.extractor_loss /= seen;
  log.train.contextual /= seen;
  log.train.adversarial /= seen;
  log.train.encoder /= seen;
  combine(weights_, log.train);
  return log;
}

GanomalyTrainResult ganomaly_train(const Matrix& train, const Matrix* validation,
                                   const GanomalyTrainConfig& cfg, const GanomalyLossWeights& w,
                                   std::uint64_t seed) {
  if (train.rows() == 0) throw EmptyCorpusError("ganomaly: empty training set");
  if (cfg.batch_size == 0) throw ConfigError("ganomaly: batch size must be positive");
  if (validation != nullptr && validation->cols() != train.cols()) {
    throw DimensionError("ganomaly: validation width differs from training width");
  }
  GanomalyTrainer trainer(static_cast<std::size_t>(train.cols()), cfg, w, seed);
  const bool early = validation != nullptr && validation->rows() > 0;
  const std::size_t epochs = early ? cfg.max_epochs : cfg.fixed_epochs;
  GanomalyTrainResult result;
  std::vector<double> history;
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    GanomalyEpoch log = trainer.run_epoch(train, epoch);
    if (early) {
      const GeneratorLosses v = generator_losses(trainer.model(), *validation, w);
      require_finite(v, "on validation at epoch " + std::to_string(epoch));
      log.validation_loss = v.total;
      history.push_back(v.total);
    }
    result.history.push_back(log);
    if (early && nn::check_early_stop(cfg.early_stop, history)) break;
  }
  result.model = std::move(trainer.model());
  return result;
}

std::vector<double> encoder_loss_scores(const GanomalyModel& m, const Matrix& x,
                                        const GanomalyLossWeights& w) {
  const Matrix z1 = nn::predict(m.encoder1, x);
  const Matrix z2 = nn::predict(m.encoder2, nn::predict(m.decoder, z1));
  return encoder_loss_rows(z1, z2, w.encoder_l1, w.encoder_l2);
}

double encoder_loss_score(const GanomalyModel& m, const orders::PharmacologicalProfile& profile,
                          const orders::Vocabulary& vocab, const GanomalyLossWeights& w) {
  const std::vector<double> x = encode_multi_hot(profile, vocab);
  const Matrix in = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  return encoder_loss_scores(m, in, w).front();
}

Matrix ganomaly_reconstruct_batch(const GanomalyModel& m, const Matrix& x) {
  return nn::predict(m.decoder, nn::predict(m.encoder1, x));
}

DrugScores ganomaly_per_drug_scores(const GanomalyModel& m,
                                    const orders::PharmacologicalProfile& profile,
                                    const orders::Vocabulary& vocab, double cut) {
  const std::vector<double> x = encode_multi_hot(profile, vocab);
  const Matrix in = Eigen::Map<const Matrix>(x.data(), 1, static_cast<Eigen::Index>(x.size()));
  const Matrix p = ganomaly_reconstruct_batch(m, in);
  DrugScores out;
  out.probabilities.assign(p.data(), p.data() + p.size());
  out.flagged = flag_low_probability(out.probabilities, profile, vocab, cut);
  return out;
}

void write_ganomaly(ByteWriter& out, const GanomalyModel& m) {
  nn::write_mlp(out, m.encoder1);
  nn::write_mlp(out, m.decoder);
  nn::write_mlp(out, m.encoder2);
  nn::write_mlp(out, m.extractor);
  nn::write_mlp(out, m.head);
}

GanomalyModel read_ganomaly(ByteReader& in) {
  GanomalyModel m;
  m.encoder1 = nn::read_mlp(in);
  m.decoder = nn::read_mlp(in);
  m.encoder2 = nn::read_mlp(in);
  m.extractor = nn::read_mlp(in);
  m.head = nn::read_mlp(in);
  const std::size_t v = m.encoder1.in();
  if (m.encoder1.out() != m.decoder.in() || m.decoder.out() != v || m.encoder2.in() != v ||
      m.encoder2.out() != m.encoder1.out() || m.extractor.in() != v ||
      m.head.in() != m.extractor.out() || m.head.out() != 1) {
    throw FormatError("ganomaly: network widths do not chain");
  }
  return m;
}

}  // namespace rxsentinel::detectors
