#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "extractkit/network.hpp"
#include "extractkit/numkit.hpp"

namespace extractkit {

enum class ArchKind : std::uint8_t { fcnn = 0, dualfcnn = 1 };

std::string_view to_string(ArchKind kind) noexcept;
ArchKind parse_arch(std::string_view name);

struct ArchitectureConfig {
  ArchKind kind = ArchKind::dualfcnn;
  std::vector<std::size_t> hidden_sizes{512, 256, 128, 64};
  double dropout_rate = 0.3;
  std::size_t input_dim = 0;

  NetworkShape shape() const;
};

// A trained (or freshly initialized) surrogate. Features fed to forward() must
// already be robust-scaled; score_raw() applies the stored scaler.
struct SurrogateModel {
  ArchitectureConfig arch;
  ParamSet params;
  RobustScalerParams scaler;
  double threshold = 0.5;

  NetworkShape shape() const { return arch.shape(); }
  bool needs_true_label() const noexcept { return arch.kind == ArchKind::dualfcnn; }
};

struct TrainConfig {
  std::size_t max_epochs = 100;
  std::size_t patience = 30;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Checkpoint {
  ParamSet params;
  std::size_t epoch = 0;  // 1-based; 0 means "never checkpointed"
  double validation_accuracy = -1.0;
  double validation_loss = 0.0;  // BCE against y_target; breaks accuracy ties
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_accuracy = 0.0;
  double validation_loss = 0.0;
};

// Scaled features plus both label vectors. y_target drives the loss; y_true
// is only an input (dualFCNN).
struct TrainingSet {
  Matrix features;
  Vector y_true;
  Vector y_target;

  std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
};

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
};

SurrogateModel build_model(const ArchitectureConfig& config, std::uint64_t seed);

// Identity scaler (center 0, scale 1) of the given width.
RobustScalerParams identity_scaler(std::size_t dims);

// Eval-mode score for one scaled sample.
double forward(const SurrogateModel& model, std::span<const double> scaled_features,
               std::optional<int> true_label = std::nullopt);
Vector forward_batch(const SurrogateModel& model, const Matrix& scaled_features,
                     const Vector* true_labels = nullptr);
Vector score_raw(const SurrogateModel& model, const Matrix& raw_features,
                 const Vector* true_labels = nullptr);

// Trains from the current parameters; the extraction loop always passes a
// freshly built model. On return model.params holds the best checkpoint.
TrainResult train(SurrogateModel& model, const TrainingSet& pool, const TrainingSet& validation,
                  const TrainConfig& config);

// Mean score over `passes` forward passes with dropout active.
Vector mc_dropout_predict(const SurrogateModel& model, const Matrix& scaled_features,
                          const Vector* true_labels, std::size_t passes, std::uint64_t seed);

inline constexpr std::string_view kModelMagic = "XTRW1";

std::vector<std::uint8_t> serialize_model(const SurrogateModel& model);
SurrogateModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const SurrogateModel& model, const std::filesystem::path& path);
SurrogateModel load_model(const std::filesystem::path& path);

}  // namespace extractkit
