#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "extractkit/network.hpp"
#include "extractkit/rng.hpp"

namespace testing {

struct GradCheckCase {
  extractkit::NetworkShape shape;
  extractkit::ParamSet params;
  extractkit::Matrix features;
  extractkit::Vector true_labels;
  extractkit::Vector targets;
  std::vector<extractkit::Matrix> masks;  // frozen keep-scales, one per hidden layer
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;  // parameters with |grad| above the floor
  std::size_t total = 0;
};

// Random net with at most `max_layers` hidden layers and widths <= max_dim.
inline GradCheckCase random_gradcheck_case(std::uint64_t seed, std::size_t max_layers = 4, std::size_t max_dim = 32) {
  extractkit::RngStream rng(seed);
  GradCheckCase c;
  c.shape.feature_width = 1 + rng.below(max_dim);
  const std::size_t layers = 1 + rng.below(max_layers);
  std::vector<std::size_t> widths;
  for (std::size_t l = 0; l < layers; ++l) widths.push_back(2 + rng.below(max_dim - 1));
  std::sort(widths.begin(), widths.end(), std::greater<>());
  widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
  c.shape.hidden = widths;
  c.shape.label_skip = rng.bernoulli(0.5);
  c.shape.dropout_rate = rng.bernoulli(0.5) ? 0.3 : 0.0;
  c.params = extractkit::init_params(c.shape, rng.next_u64());
  // Non-trivial gains and offsets so their gradients are exercised.
  for (std::size_t l = 0; l < layers && l < c.shape.hidden.size(); ++l) {
    auto& g = c.params.blocks[extractkit::NetworkShape::gain_block(l)];
    auto& o = c.params.blocks[extractkit::NetworkShape::offset_block(l)];
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      g(i, 0) = rng.uniform(0.5, 1.5);
      o(i, 0) = rng.uniform(-0.3, 0.3);
    }
  }
  const Eigen::Index batch = static_cast<Eigen::Index>(2 + rng.below(6));
  c.features.resize(batch, static_cast<Eigen::Index>(c.shape.feature_width));
  for (Eigen::Index i = 0; i < c.features.size(); ++i) c.features.data()[i] = rng.normal();
  c.true_labels.resize(batch);
  c.targets.resize(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    c.true_labels(i) = double(rng.below(2));
    c.targets(i) = double(rng.below(2));
  }
  const double keep = 1.0 / (1.0 - c.shape.dropout_rate);
  for (std::size_t width : c.shape.hidden) {
    extractkit::Matrix m(batch, static_cast<Eigen::Index>(width));
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = rng.uniform() < c.shape.dropout_rate ? 0.0 : keep;
    }
    c.masks.push_back(std::move(m));
  }
  return c;
}

inline double gradcheck_loss(const GradCheckCase& c, const extractkit::ParamSet& p) {
  const auto* labels = c.shape.label_skip ? &c.true_labels : nullptr;
  return extractkit::trace_loss(extractkit::forward_trace_with_masks(p, c.shape, c.features, labels, c.masks),
                                c.targets);
}

// Central differences with step h; relative error |a-n| / max(|a|,|n|) over
// parameters whose analytic gradient exceeds `floor`.
inline GradCheckResult run_gradcheck(const GradCheckCase& c, double h = 1e-4, double floor = 1e-6) {
  const auto* labels = c.shape.label_skip ? &c.true_labels : nullptr;
  const auto trace = extractkit::forward_trace_with_masks(c.params, c.shape, c.features, labels, c.masks);
  const extractkit::ParamSet grads = extractkit::backprop(c.params, c.shape, trace, c.targets);
  GradCheckResult r;
  extractkit::ParamSet p = c.params;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    for (Eigen::Index i = 0; i < p.blocks[b].size(); ++i) {
      ++r.total;
      const double analytic = grads.blocks[b].data()[i];
      if (std::abs(analytic) <= floor) continue;
      double& w = p.blocks[b].data()[i];
      const double saved = w;
      w = saved + h;
      const double up = gradcheck_loss(c, p);
      w = saved - h;
      const double down = gradcheck_loss(c, p);
      w = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric));
      r.max_relative_error = std::max(r.max_relative_error, rel);
      ++r.checked;
    }
  }
  return r;
}

}  // namespace testing
