#include "extractkit/network.hpp"

#include <cmath>
#include <string>

#include "extractkit/errors.hpp"

namespace extractkit {

std::size_t NetworkShape::body_parameter_count() const noexcept {
  std::size_t total = 0;
  std::size_t in = feature_width;
  for (std::size_t out : hidden) {
    total += in * out + 3 * out;
    in = out;
  }
  return total + in + 1;
}

std::size_t NetworkShape::parameter_count() const noexcept {
  if (!label_skip) return body_parameter_count();
  return body_parameter_count() + (hidden.empty() ? 1 : hidden.front()) + 1;
}

void NetworkShape::validate() const {
  if (feature_width == 0) throw ConfigError("network: feature width must be positive");
  if (hidden.empty()) throw ConfigError("network: hidden layer list is empty");
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (hidden[i] == 0) throw ConfigError("network: hidden sizes must be positive");
    if (i > 0 && hidden[i] >= hidden[i - 1]) {
      throw ConfigError("network: hidden sizes must be strictly decreasing");
    }
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("network: dropout rate must be in [0,1)");
  }
}

namespace {

void fill_uniform(Matrix& m, Eigen::Index col_begin, Eigen::Index col_end, double limit, RngStream& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = col_begin; c < col_end; ++c) m(r, c) = rng.uniform(-limit, limit);
  }
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

double elu_derivative(double pre, double activated) { return pre > 0.0 ? 1.0 : activated + kEluAlpha; }

}  // namespace

ParamSet init_params(const NetworkShape& shape, std::uint64_t seed) {
  shape.validate();
  ParamSet p;
  p.blocks.reserve(shape.block_count());
  RngStream body_rng(seed);
  RngStream label_rng = body_rng.derive(0x6c6162656cULL);

  std::size_t in = shape.feature_width;
  for (std::size_t l = 0; l < shape.hidden.size(); ++l) {
    const std::size_t out = shape.hidden[l];
    const std::size_t cols = (l == 0) ? shape.input_width() : in;
    Matrix w(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(cols));
    const double limit = glorot_limit(in, out);
    fill_uniform(w, 0, static_cast<Eigen::Index>(in), limit, body_rng);
    if (l == 0 && shape.label_skip) {
      fill_uniform(w, static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(cols), limit, label_rng);
    }
    p.blocks.push_back(std::move(w));
    p.blocks.push_back(Matrix::Zero(static_cast<Eigen::Index>(out), 1));
    p.blocks.push_back(Matrix::Ones(static_cast<Eigen::Index>(out), 1));
    p.blocks.push_back(Matrix::Zero(static_cast<Eigen::Index>(out), 1));
    in = out;
  }
  Matrix head(1, static_cast<Eigen::Index>(in));
  fill_uniform(head, 0, static_cast<Eigen::Index>(in), glorot_limit(in, 1), body_rng);
  p.blocks.push_back(std::move(head));
  p.blocks.push_back(Matrix::Zero(1, 1));
  if (shape.label_skip) p.blocks.push_back(Matrix::Constant(1, 1, 1.0));
  return p;
}

namespace {

void check_params(const ParamSet& params, const NetworkShape& shape) {
  if (params.blocks.size() != shape.block_count()) {
    throw ShapeError("network: parameter block count does not match shape");
  }
}

Matrix assemble_input(const NetworkShape& shape, const Matrix& features, const Vector* true_labels,
                      Vector& label_column) {
  if (static_cast<std::size_t>(features.cols()) != shape.feature_width) {
    throw ShapeError("network: expected " + std::to_string(shape.feature_width) + " features, got " +
                     std::to_string(features.cols()));
  }
  if (!shape.label_skip) return features;
  if (true_labels == nullptr) throw ShapeError("network: dualFCNN requires a true-label input");
  if (true_labels->size() != features.rows()) throw ShapeError("network: true-label count mismatch");
  label_column = *true_labels;
  Matrix input(features.rows(), features.cols() + 1);
  input.leftCols(features.cols()) = features;
  input.col(features.cols()) = label_column;
  return input;
}

// Mask source: either a live RNG (train mode), fixed masks, or none (eval).
struct MaskSource {
  RngStream* rng = nullptr;
  const std::vector<Matrix>* fixed = nullptr;
};

ForwardTrace run_forward(const ParamSet& params, const NetworkShape& shape, const Matrix& features,
                         const Vector* true_labels, MaskSource masks) {
  check_params(params, shape);
  ForwardTrace t;
  t.param_version = params.version;
  t.input = assemble_input(shape, features, true_labels, t.label_column);
  const Eigen::Index batch = features.rows();
  const double keep = 1.0 / (1.0 - shape.dropout_rate);

  const Matrix* prev = &t.input;
  t.layers.resize(shape.hidden.size());
  for (std::size_t l = 0; l < shape.hidden.size(); ++l) {
    LayerTrace& lt = t.layers[l];
    const Matrix& w = params.blocks[NetworkShape::weight_block(l)];
    const Matrix& b = params.blocks[NetworkShape::bias_block(l)];
    const Matrix& gain = params.blocks[NetworkShape::gain_block(l)];
    const Matrix& offset = params.blocks[NetworkShape::offset_block(l)];
    const Eigen::Index width = w.rows();

    lt.pre_activation.noalias() = (*prev) * w.transpose();
    lt.pre_activation.rowwise() += b.col(0).transpose();
    lt.activated = lt.pre_activation.unaryExpr([](double z) { return elu(z); });

    lt.normalized.resize(batch, width);
    lt.inv_sigma.resize(batch);
    for (Eigen::Index r = 0; r < batch; ++r) {
      const double mean = lt.activated.row(r).mean();
      const double var = (lt.activated.row(r).array() - mean).square().mean();
      lt.inv_sigma[r] = 1.0 / std::sqrt(var + kLayerNormEps);
      lt.normalized.row(r) = (lt.activated.row(r).array() - mean) * lt.inv_sigma[r];
    }
    lt.output = lt.normalized;
    lt.output.array().rowwise() *= gain.col(0).transpose().array();
    lt.output.rowwise() += offset.col(0).transpose();

    if (masks.fixed != nullptr) {
      if (l >= masks.fixed->size() || (*masks.fixed)[l].rows() != batch || (*masks.fixed)[l].cols() != width) {
        throw ShapeError("network: fixed dropout mask shape mismatch");
      }
      lt.keep_scale = (*masks.fixed)[l];
      lt.output.array() *= lt.keep_scale.array();
    } else if (masks.rng != nullptr && shape.dropout_rate > 0.0) {
      lt.keep_scale.resize(batch, width);
      for (Eigen::Index r = 0; r < batch; ++r) {
        for (Eigen::Index c = 0; c < width; ++c) {
          lt.keep_scale(r, c) = masks.rng->uniform() < shape.dropout_rate ? 0.0 : keep;
        }
      }
      lt.output.array() *= lt.keep_scale.array();
    }
    prev = &lt.output;
  }

  const Matrix& head = params.blocks[shape.head_weight_block()];
  const double head_bias = params.blocks[shape.head_bias_block()](0, 0);
  t.logits = ((*prev) * head.transpose()).col(0).array() + head_bias;
  if (shape.label_skip) t.logits += params.blocks[shape.skip_block()](0, 0) * t.label_column;
  require_finite(Matrix(t.logits), "network forward");
  t.scores = t.logits.unaryExpr([](double z) { return sigmoid(z); });
  t.valid = true;
  return t;
}

}  // namespace

ForwardTrace forward_trace(const ParamSet& params, const NetworkShape& shape, const Matrix& features,
                           const Vector* true_labels, RngStream* dropout_rng) {
  return run_forward(params, shape, features, true_labels, MaskSource{dropout_rng, nullptr});
}

ForwardTrace forward_trace_with_masks(const ParamSet& params, const NetworkShape& shape,
                                      const Matrix& features, const Vector* true_labels,
                                      const std::vector<Matrix>& keep_scales) {
  return run_forward(params, shape, features, true_labels, MaskSource{nullptr, &keep_scales});
}

Vector predict_scores(const ParamSet& params, const NetworkShape& shape, const Matrix& features,
                      const Vector* true_labels) {
  return forward_trace(params, shape, features, true_labels, nullptr).scores;
}

double trace_loss(const ForwardTrace& trace, const Vector& targets) {
  return bce_loss(std::span<const double>(trace.scores.data(), static_cast<std::size_t>(trace.scores.size())),
                  std::span<const double>(targets.data(), static_cast<std::size_t>(targets.size())));
}

ParamSet backprop(const ParamSet& params, const NetworkShape& shape, const ForwardTrace& trace,
                  const Vector& targets) {
  check_params(params, shape);
  if (!trace.valid) throw ContractError("backprop: no forward trace recorded");
  if (trace.param_version != params.version) {
    throw ContractError("backprop: forward trace is stale (parameters changed since the forward pass)");
  }
  if (targets.size() != trace.scores.size()) throw ShapeError("backprop: target count mismatch");

  ParamSet grads = params.zeros_like();
  const double inv_batch = 1.0 / static_cast<double>(targets.size());
  const Vector d_logit = (trace.scores - targets) * inv_batch;

  const std::size_t depth = shape.hidden.size();
  const Matrix& last_out = trace.layers[depth - 1].output;
  grads.blocks[shape.head_weight_block()] = d_logit.transpose() * last_out;
  grads.blocks[shape.head_bias_block()](0, 0) = d_logit.sum();
  if (shape.label_skip) grads.blocks[shape.skip_block()](0, 0) = d_logit.dot(trace.label_column);

  Matrix d_out = d_logit * params.blocks[shape.head_weight_block()];
  for (std::size_t l = depth; l-- > 0;) {
    const LayerTrace& lt = trace.layers[l];
    const Matrix& gain = params.blocks[NetworkShape::gain_block(l)];
    const Matrix& w = params.blocks[NetworkShape::weight_block(l)];

    Matrix d_norm_out = d_out;
    if (lt.keep_scale.size() > 0) d_norm_out.array() *= lt.keep_scale.array();

    grads.blocks[NetworkShape::gain_block(l)] =
        (d_norm_out.array() * lt.normalized.array()).colwise().sum().transpose();
    grads.blocks[NetworkShape::offset_block(l)] = d_norm_out.colwise().sum().transpose();

    Matrix d_xhat = d_norm_out;
    d_xhat.array().rowwise() *= gain.col(0).transpose().array();
    Matrix d_pre(d_xhat.rows(), d_xhat.cols());
    for (Eigen::Index r = 0; r < d_xhat.rows(); ++r) {
      const double mean_d = d_xhat.row(r).mean();
      const double mean_dx = (d_xhat.row(r).array() * lt.normalized.row(r).array()).mean();
      for (Eigen::Index c = 0; c < d_xhat.cols(); ++c) {
        const double d_act =
            lt.inv_sigma[r] * (d_xhat(r, c) - mean_d - lt.normalized(r, c) * mean_dx);
        d_pre(r, c) = d_act * elu_derivative(lt.pre_activation(r, c), lt.activated(r, c));
      }
    }

    const Matrix& layer_in = (l == 0) ? trace.input : trace.layers[l - 1].output;
    grads.blocks[NetworkShape::weight_block(l)].noalias() = d_pre.transpose() * layer_in;
    grads.blocks[NetworkShape::bias_block(l)] = d_pre.colwise().sum().transpose();
    if (l > 0) d_out.noalias() = d_pre * w;
  }
  return grads;
}

}  // namespace extractkit
