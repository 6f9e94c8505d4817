#include "rxsentinel/service/artifact.hpp"

#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "rxsentinel/binary_io.hpp"
#include "rxsentinel/detectors/encoding.hpp"
#include "rxsentinel/digest.hpp"
#include "rxsentinel/errors.hpp"

namespace rxsentinel::service {

namespace {

constexpr std::string_view kMagic = "RXSA";
constexpr std::string_view kKindNames[] = {"frequency", "iforest", "autoencoder", "ganomaly"};

nlohmann::ordered_json metadata_json(const TrainingMetadata& m) {
  return {{"as_of", m.as_of},
          {"window_years", m.window_years},
          {"first_year", m.first_year},
          {"last_year", m.last_year},
          {"seed", m.seed},
          {"epochs", m.epochs},
          {"training_profiles", m.training_profiles},
          {"config_digest", m.config_digest}};
}

TrainingMetadata metadata_from_json(const nlohmann::json& j) {
  TrainingMetadata m;
  m.as_of = j.at("as_of").get<std::string>();
  m.window_years = j.at("window_years").get<int>();
  m.first_year = j.at("first_year").get<int>();
  m.last_year = j.at("last_year").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.epochs = j.at("epochs").get<std::size_t>();
  m.training_profiles = j.at("training_profiles").get<std::size_t>();
  m.config_digest = j.at("config_digest").get<std::string>();
  return m;
}

std::size_t count_oov(const orders::PharmacologicalProfile& p, const orders::Vocabulary& v) {
  std::size_t n = 0;
  for (const auto& d : p.drugs) {
    if (!v.index_of(d)) ++n;
  }
  return n;
}

}  // namespace

std::string_view to_string(ModelKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

ModelKind parse_model_kind(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == name) return static_cast<ModelKind>(i);
  }
  throw ConfigError("unknown model kind '" + std::string(name) +
                    "' (expected frequency, iforest, autoencoder or ganomaly)");
}

bool has_drug_flags(ModelKind k) {
  return k == ModelKind::autoencoder || k == ModelKind::ganomaly;
}

std::string serialize_artifact(const Artifact& a) {
  if (static_cast<std::size_t>(a.kind) != a.model.index()) {
    throw FormatError("artifact kind does not match its payload");
  }
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kArtifactVersion);
  w.u8(static_cast<std::uint8_t>(a.kind));
  w.u64(a.vocabulary.size());
  for (const auto& d : a.vocabulary.entries()) w.str(d.code());
  w.str(metadata_json(a.metadata).dump());
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, baselines::FrequencyModel>) {
          baselines::write_frequency(w, m);
        } else if constexpr (std::is_same_v<T, IforestModel>) {
          baselines::write_lsi(w, m.lsi);
          baselines::write_forest(w, m.forest);
        } else if constexpr (std::is_same_v<T, detectors::AutoencoderModel>) {
          detectors::write_autoencoder(w, m);
        } else {
          detectors::write_ganomaly(w, m);
        }
      },
      a.model);
  return w.take();
}

Artifact deserialize_artifact(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.remaining() < kMagic.size() || r.raw(kMagic.size()) != kMagic) {
    throw FormatError("not a model artifact");
  }
  const std::uint32_t version = r.u32();
  if (version != kArtifactVersion) {
    throw FormatError("unsupported artifact version " + std::to_string(version) +
                      " (this build reads " + std::to_string(kArtifactVersion) + ")");
  }
  const std::uint8_t kind = r.u8();
  if (kind >= std::size(kKindNames)) throw FormatError("unknown artifact model kind");
  Artifact a;
  a.kind = static_cast<ModelKind>(kind);
  const std::uint64_t v = r.u64();
  if (v > r.remaining()) throw FormatError("artifact vocabulary size is implausible");
  std::vector<orders::DrugId> codes;
  codes.reserve(v);
  for (std::uint64_t i = 0; i < v; ++i) codes.emplace_back(r.str());
  a.vocabulary = orders::Vocabulary::from_sorted(std::move(codes));
  try {
    a.metadata = metadata_from_json(nlohmann::json::parse(r.str()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("artifact metadata: ") + e.what());
  }
  switch (a.kind) {
    case ModelKind::frequency:
      a.model = baselines::read_frequency(r);
      break;
    case ModelKind::iforest: {
      IforestModel m;
      m.lsi = baselines::read_lsi(r);
      m.forest = baselines::read_forest(r);
      a.model = std::move(m);
      break;
    }
    case ModelKind::autoencoder:
      a.model = detectors::read_autoencoder(r);
      break;
    case ModelKind::ganomaly:
      a.model = detectors::read_ganomaly(r);
      break;
  }
  if (!r.at_end()) throw FormatError("trailing bytes after artifact payload");
  return a;
}

void save_artifact(const std::string& path, const Artifact& a) {
  const std::string bytes = serialize_artifact(a);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

Artifact load_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_artifact(bytes);
}

std::string artifact_digest(const Artifact& a) { return sha256_hex(serialize_artifact(a)); }

std::vector<ProfileScore> score_profiles(const Artifact& a,
                                         std::span<const orders::PharmacologicalProfile> profiles,
                                         double drug_cut) {
  std::vector<ProfileScore> out(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    out[i].oov = count_oov(profiles[i], a.vocabulary);
  }
  if (profiles.empty()) return out;
  const auto& vocab = a.vocabulary;

  auto fill_flags = [&](const nn::Matrix& probs) {
    std::vector<double> row(static_cast<std::size_t>(probs.cols()));
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      for (Eigen::Index c = 0; c < probs.cols(); ++c) row[static_cast<std::size_t>(c)] = probs(r, c);
      out[i].flags = detectors::flag_low_probability(row, profiles[i], vocab, drug_cut);
      if (a.kind == ModelKind::autoencoder) {
        out[i].score = detectors::weakest_drug_score(row, profiles[i], vocab);
      }
    }
  };

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, baselines::FrequencyModel>) {
          for (std::size_t i = 0; i < profiles.size(); ++i) {
            out[i].score = baselines::freq_score(m, profiles[i]);
          }
        } else if constexpr (std::is_same_v<T, IforestModel>) {
          const nn::Matrix emb =
              baselines::lsi_transform_all(m.lsi, baselines::count_matrix(profiles, vocab));
          std::vector<double> row(static_cast<std::size_t>(emb.cols()));
          for (std::size_t i = 0; i < profiles.size(); ++i) {
            for (Eigen::Index c = 0; c < emb.cols(); ++c) {
              row[static_cast<std::size_t>(c)] = emb(static_cast<Eigen::Index>(i), c);
            }
            out[i].score = m.forest.score(row);
          }
        } else if constexpr (std::is_same_v<T, detectors::AutoencoderModel>) {
          fill_flags(detectors::ae_reconstruct_batch(m, detectors::encode_batch(profiles, vocab)));
        } else {
          const nn::Matrix x = detectors::encode_batch(profiles, vocab);
          const std::vector<double> s = detectors::encoder_loss_scores(m, x);
          for (std::size_t i = 0; i < profiles.size(); ++i) out[i].score = s[i];
          fill_flags(detectors::ganomaly_reconstruct_batch(m, x));
        }
      },
      a.model);
  return out;
}

}  // namespace rxsentinel::service
