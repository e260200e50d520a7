#include "extractkit/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "extractkit/errors.hpp"

namespace extractkit {

void require_finite(const Matrix& m, const char* where) {
  const double* data = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw KernelError(std::string(where) + ": non-finite value", static_cast<std::size_t>(i));
    }
  }
}

void require_finite(std::span<const double> v, const char* where) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw KernelError(std::string(where) + ": non-finite value", i);
  }
}

double elu(double x) noexcept { return x > 0.0 ? x : kEluAlpha * std::expm1(x); }

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector activation(Activation kind, const Vector& x) {
  require_finite(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), "activation");
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out[i] = kind == Activation::elu ? elu(x[i]) : sigmoid(x[i]);
  }
  return out;
}

Vector layer_norm(const Vector& x, const Vector& gain, const Vector& offset, double eps) {
  if (x.size() != gain.size() || x.size() != offset.size()) {
    throw ShapeError("layer_norm: length mismatch");
  }
  if (!(eps > 0.0)) throw ConfigError("layer_norm: eps must be positive");
  if (x.size() == 0) return x;
  const double mean = x.mean();
  const Vector centered = x.array() - mean;
  const double var = centered.squaredNorm() / static_cast<double>(x.size());
  const double inv_sigma = 1.0 / std::sqrt(var + eps);
  return (gain.array() * centered.array() * inv_sigma + offset.array()).matrix();
}

Vector dense(const Vector& x, const Matrix& weights, const Vector& bias) {
  if (weights.cols() != x.size() || weights.rows() != bias.size()) {
    throw ShapeError("dense: dimension mismatch (W is " + std::to_string(weights.rows()) + "x" +
                     std::to_string(weights.cols()) + ", x has " + std::to_string(x.size()) + ")");
  }
  return weights * x + bias;
}

DropoutResult dropout(const Vector& x, double rate, RngStream& rng, bool train_mode) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0,1)");
  DropoutResult r{x, std::vector<std::uint8_t>(static_cast<std::size_t>(x.size()), 1)};
  if (!train_mode || rate == 0.0) return r;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (rng.uniform() < rate) {
      r.mask[static_cast<std::size_t>(i)] = 0;
      r.output[i] = 0.0;
    } else {
      r.output[i] *= keep_scale;
    }
  }
  return r;
}

double bce_loss(std::span<const double> scores, std::span<const double> labels) {
  if (scores.empty()) throw ShapeError("bce_loss: empty batch");
  if (scores.size() != labels.size()) throw ShapeError("bce_loss: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw KernelError("bce_loss: non-finite score", i);
    const double p = std::clamp(scores[i], kScoreClamp, 1.0 - kScoreClamp);
    total -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log1p(-p);
  }
  return total / static_cast<double>(scores.size());
}

std::size_t ParamSet::count() const noexcept {
  std::size_t n = 0;
  for (const auto& b : blocks) n += static_cast<std::size_t>(b.size());
  return n;
}

bool ParamSet::same_shape(const ParamSet& other) const noexcept {
  if (blocks.size() != other.blocks.size()) return false;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].rows() != other.blocks[i].rows() || blocks[i].cols() != other.blocks[i].cols()) {
      return false;
    }
  }
  return true;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  z.blocks.reserve(blocks.size());
  for (const auto& b : blocks) z.blocks.push_back(Matrix::Zero(b.rows(), b.cols()));
  return z;
}

double ParamSet::squared_norm() const noexcept {
  double s = 0.0;
  for (const auto& b : blocks) s += b.squaredNorm();
  return s;
}

bool ParamSet::all_finite() const noexcept {
  for (const auto& b : blocks) {
    if (!b.allFinite()) return false;
  }
  return true;
}

AdamState AdamState::for_params(const ParamSet& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  return s;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment)) {
    throw ShapeError("adam_step: shape mismatch between params, grads and moments");
  }
  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    auto& m = state.first_moment.blocks[i];
    auto& v = state.second_moment.blocks[i];
    const auto& g = grads.blocks[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    params.blocks[i].array() -=
        c.lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + c.epsilon);
  }
  params.version += 1;
}

namespace {

double quantile_sorted(const std::vector<double>& values, double q) {
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ShapeError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, q);
}

RobustScalerParams fit_robust_scaler(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw ShapeError("fit_robust_scaler: empty matrix");
  RobustScalerParams p{Vector(x.cols()), Vector(x.cols())};
  std::vector<double> column(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) column[static_cast<std::size_t>(i)] = x(i, j);
    std::sort(column.begin(), column.end());
    p.center[j] = quantile_sorted(column, 0.5);
    const double iqr = quantile_sorted(column, 0.75) - quantile_sorted(column, 0.25);
    p.scale[j] = iqr > 0.0 ? iqr : 1.0;
  }
  return p;
}

Matrix apply_robust_scaler(const RobustScalerParams& params, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != params.dims()) {
    throw ShapeError("apply_robust_scaler: feature count mismatch");
  }
  Matrix out = x;
  out.rowwise() -= params.center.transpose();
  out.array().rowwise() /= params.scale.transpose().array();
  return out;
}

Matrix invert_robust_scaler(const RobustScalerParams& params, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != params.dims()) {
    throw ShapeError("invert_robust_scaler: feature count mismatch");
  }
  Matrix out = x;
  out.array().rowwise() *= params.scale.transpose().array();
  out.rowwise() += params.center.transpose();
  return out;
}

}  // namespace extractkit
