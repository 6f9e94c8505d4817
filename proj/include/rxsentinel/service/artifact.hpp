#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rxsentinel/baselines/frequency.hpp"
#include "rxsentinel/baselines/isolation_forest.hpp"
#include "rxsentinel/baselines/lsi.hpp"
#include "rxsentinel/detectors/autoencoder.hpp"
#include "rxsentinel/detectors/ganomaly.hpp"
#include "rxsentinel/orders.hpp"

namespace rxsentinel::service {

inline constexpr std::uint32_t kArtifactVersion = 1;

enum class ModelKind : std::uint8_t { frequency, iforest, autoencoder, ganomaly };

std::string_view to_string(ModelKind k);
/// Throws ConfigError for an unknown name.
ModelKind parse_model_kind(std::string_view name);
/// Neural models reconstruct every drug and can flag individual orders.
bool has_drug_flags(ModelKind k);

struct IforestModel {
  baselines::LsiBasis lsi;
  baselines::IsolationForest forest;
};

using ModelPayload = std::variant<baselines::FrequencyModel, IforestModel,
                                  detectors::AutoencoderModel, detectors::GanomalyModel>;

struct TrainingMetadata {
  std::string as_of;  // YYYY-MM-DD
  int window_years = 0;
  int first_year = 0;  // inclusive
  int last_year = 0;   // exclusive
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  std::size_t training_profiles = 0;
  std::string config_digest;
};

struct Artifact {
  ModelKind kind = ModelKind::frequency;
  orders::Vocabulary vocabulary;
  TrainingMetadata metadata;
  ModelPayload model;
};

std::string serialize_artifact(const Artifact& a);
/// Throws FormatError for a bad magic, a different version, a kind that does
/// not match the payload, or truncated or trailing bytes.
Artifact deserialize_artifact(std::string_view bytes);

void save_artifact(const std::string& path, const Artifact& a);
Artifact load_artifact(const std::string& path);
std::string artifact_digest(const Artifact& a);

struct ProfileScore {
  double score = 0.0;
  std::size_t oov = 0;  // profile drugs outside the vocabulary
  std::optional<std::vector<orders::DrugId>> flags;
};

/// Higher is more atypical for every kind. Frequency gives 1/count (+inf for
/// unseen profiles), iforest the isolation score, the autoencoder the largest
/// 1 - p over present drugs, and GANomaly the encoder loss.
std::vector<ProfileScore> score_profiles(const Artifact& a,
                                         std::span<const orders::PharmacologicalProfile> profiles,
                                         double drug_cut = detectors::kDefaultDrugCut);

}  // namespace rxsentinel::service
