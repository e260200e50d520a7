#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "extractkit/numkit.hpp"

namespace extractkit {

// Geometry of the dense body shared by FCNN and dualFCNN.
//
// Each hidden layer is dense -> ELU -> layer norm -> dropout; the head is a
// single logit followed by a sigmoid. With `label_skip` set the true label is
// appended as an extra input column and also added to the final logit through
// a learnable scalar.
struct NetworkShape {
  std::size_t feature_width = 0;
  std::vector<std::size_t> hidden;
  bool label_skip = false;
  double dropout_rate = 0.0;

  std::size_t input_width() const noexcept { return feature_width + (label_skip ? 1 : 0); }
  std::size_t hidden_layers() const noexcept { return hidden.size(); }

  // Block indices inside ParamSet.
  static std::size_t weight_block(std::size_t layer) noexcept { return 4 * layer; }
  static std::size_t bias_block(std::size_t layer) noexcept { return 4 * layer + 1; }
  static std::size_t gain_block(std::size_t layer) noexcept { return 4 * layer + 2; }
  static std::size_t offset_block(std::size_t layer) noexcept { return 4 * layer + 3; }
  std::size_t head_weight_block() const noexcept { return 4 * hidden.size(); }
  std::size_t head_bias_block() const noexcept { return 4 * hidden.size() + 1; }
  std::size_t skip_block() const noexcept { return 4 * hidden.size() + 2; }
  std::size_t block_count() const noexcept { return 4 * hidden.size() + (label_skip ? 3 : 2); }

  // Number of parameters excluding the label input column and the skip scalar.
  std::size_t body_parameter_count() const noexcept;
  std::size_t parameter_count() const noexcept;

  void validate() const;
};

// Glorot-uniform weights, zero biases and offsets, unit gains, skip weight 1.
// Feature columns of the first layer are drawn before (and independently of)
// the label column, so FCNN and dualFCNN built from the same seed share
// identical body weights.
ParamSet init_params(const NetworkShape& shape, std::uint64_t seed);

struct LayerTrace {
  Matrix pre_activation;
  Matrix activated;
  Matrix normalized;  // xhat, before gain/offset
  Vector inv_sigma;   // per row
  Matrix keep_scale;  // dropout multipliers (0 or 1/(1-rate)); empty in eval mode
  Matrix output;
};

// Everything backprop needs from a forward pass, stamped with the parameter
// version it was computed against.
struct ForwardTrace {
  std::uint64_t param_version = 0;
  bool valid = false;
  Matrix input;
  std::vector<LayerTrace> layers;
  Vector label_column;
  Vector logits;
  Vector scores;
};

// Batched forward pass. `dropout_rng == nullptr` means eval mode.
ForwardTrace forward_trace(const ParamSet& params, const NetworkShape& shape, const Matrix& features,
                           const Vector* true_labels, RngStream* dropout_rng);

// Forward pass with explicit dropout masks (one per hidden layer), used for
// gradient checks with a frozen mask.
ForwardTrace forward_trace_with_masks(const ParamSet& params, const NetworkShape& shape,
                                      const Matrix& features, const Vector* true_labels,
                                      const std::vector<Matrix>& keep_scales);

Vector predict_scores(const ParamSet& params, const NetworkShape& shape, const Matrix& features,
                      const Vector* true_labels);

// Exact gradient of mean BCE w.r.t. every parameter block.
ParamSet backprop(const ParamSet& params, const NetworkShape& shape, const ForwardTrace& trace,
                  const Vector& targets);

double trace_loss(const ForwardTrace& trace, const Vector& targets);

}  // namespace extractkit
