#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "extractkit/rng.hpp"

namespace extractkit {

// Dense row-major semantics: one sample per row.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kEluAlpha = 1.0;
inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kScoreClamp = 1e-7;

enum class Activation { elu, sigmoid };

// Throws KernelError naming the first non-finite entry (column-major index).
void require_finite(const Matrix& m, const char* where);
void require_finite(std::span<const double> v, const char* where);

double elu(double x) noexcept;
double sigmoid(double x) noexcept;
Vector activation(Activation kind, const Vector& x);

Vector layer_norm(const Vector& x, const Vector& gain, const Vector& offset,
                  double eps = kLayerNormEps);

Vector dense(const Vector& x, const Matrix& weights, const Vector& bias);

struct DropoutResult {
  Vector output;
  std::vector<std::uint8_t> mask;  // 1 = kept
};

// Inverted dropout: survivors are scaled by 1/(1-rate) in train mode.
DropoutResult dropout(const Vector& x, double rate, RngStream& rng, bool train_mode);

// Mean binary cross-entropy with scores clamped to [1e-7, 1-1e-7].
double bce_loss(std::span<const double> scores, std::span<const double> labels);

// Parameter tensors of a network, stored as an ordered list of blocks.
// `version` is bumped by every optimizer step so stale forward traces can be
// detected.
struct ParamSet {
  std::vector<Matrix> blocks;
  std::uint64_t version = 0;

  std::size_t count() const noexcept;
  bool same_shape(const ParamSet& other) const noexcept;
  ParamSet zeros_like() const;
  double squared_norm() const noexcept;
  bool all_finite() const noexcept;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  ParamSet first_moment;
  ParamSet second_moment;
  std::uint64_t step = 0;

  static AdamState for_params(const ParamSet& params, AdamConfig config = {});
};

// Bias-corrected Adam. Increments state.step and params.version.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state);

struct RobustScalerParams {
  Vector center;  // per-feature median
  Vector scale;   // per-feature IQR, 1 where the IQR is zero

  std::size_t dims() const noexcept { return static_cast<std::size_t>(center.size()); }
};

// Linear-interpolation quantile of an unsorted sample (q in [0,1]).
double quantile(std::vector<double> values, double q);

RobustScalerParams fit_robust_scaler(const Matrix& x);
Matrix apply_robust_scaler(const RobustScalerParams& params, const Matrix& x);
Matrix invert_robust_scaler(const RobustScalerParams& params, const Matrix& x);

}  // namespace extractkit
