#include "extractkit/surrogate.hpp"

#include <numeric>

#include <spdlog/spdlog.h>

#include "extractkit/binary_io.hpp"
#include "extractkit/errors.hpp"

namespace extractkit {

std::string_view to_string(ArchKind kind) noexcept {
  return kind == ArchKind::fcnn ? "fcnn" : "dualfcnn";
}

ArchKind parse_arch(std::string_view name) {
  if (name == "fcnn") return ArchKind::fcnn;
  if (name == "dualfcnn") return ArchKind::dualfcnn;
  throw ConfigError("unknown architecture \"" + std::string(name) + "\" (expected fcnn|dualfcnn)");
}

NetworkShape ArchitectureConfig::shape() const {
  NetworkShape s;
  s.feature_width = input_dim;
  s.hidden = hidden_sizes;
  s.label_skip = kind == ArchKind::dualfcnn;
  s.dropout_rate = dropout_rate;
  s.validate();
  return s;
}

void TrainConfig::validate() const {
  if (max_epochs == 0 || patience == 0 || batch_size == 0) {
    throw ConfigError("train: max_epochs, patience and batch_size must be positive");
  }
  if (patience > max_epochs) throw ConfigError("train: patience exceeds max_epochs");
  if (!(learning_rate >= 0.0)) throw ConfigError("train: learning rate must be non-negative");
}

RobustScalerParams identity_scaler(std::size_t dims) {
  const auto n = static_cast<Eigen::Index>(dims);
  return RobustScalerParams{Vector::Zero(n), Vector::Ones(n)};
}

SurrogateModel build_model(const ArchitectureConfig& config, std::uint64_t seed) {
  SurrogateModel m;
  m.arch = config;
  m.params = init_params(config.shape(), seed);
  m.scaler = identity_scaler(config.input_dim);
  return m;
}

double forward(const SurrogateModel& model, std::span<const double> scaled_features,
               std::optional<int> true_label) {
  if (model.needs_true_label() && !true_label) {
    throw ShapeError("forward: dualFCNN called without a true label");
  }
  Matrix x = Eigen::Map<const Eigen::RowVectorXd>(scaled_features.data(),
                                                   static_cast<Eigen::Index>(scaled_features.size()));
  Vector y(1);
  y[0] = true_label.value_or(0);
  return forward_batch(model, x, model.needs_true_label() ? &y : nullptr)[0];
}

Vector forward_batch(const SurrogateModel& model, const Matrix& scaled_features, const Vector* true_labels) {
  return predict_scores(model.params, model.shape(), scaled_features, true_labels);
}

Vector score_raw(const SurrogateModel& model, const Matrix& raw_features, const Vector* true_labels) {
  return forward_batch(model, apply_robust_scaler(model.scaler, raw_features), true_labels);
}

namespace {

double accuracy_at_half(const Vector& scores, const Vector& targets) {
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double predicted = scores[i] >= 0.5 ? 1.0 : 0.0;
    if (predicted == targets[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

void check_set(const TrainingSet& set, std::size_t dims, const char* what) {
  if (set.size() == 0) throw ConfigError(std::string("train: empty ") + what);
  if (static_cast<std::size_t>(set.features.cols()) != dims) {
    throw ShapeError(std::string("train: ") + what + " feature width mismatch");
  }
  if (set.y_target.size() != set.features.rows() || set.y_true.size() != set.features.rows()) {
    throw ShapeError(std::string("train: ") + what + " label count mismatch");
  }
}

}  // namespace

TrainResult train(SurrogateModel& model, const TrainingSet& pool, const TrainingSet& validation,
                  const TrainConfig& config) {
  config.validate();
  const NetworkShape shape = model.shape();
  check_set(pool, shape.feature_width, "pool");
  check_set(validation, shape.feature_width, "validation set");
  const double positives = pool.y_target.sum();
  if (positives == 0.0 || positives == static_cast<double>(pool.size())) {
    spdlog::warn("train: labeled pool contains a single target class ({} samples)", pool.size());
  }

  const Vector* pool_true = shape.label_skip ? &pool.y_true : nullptr;
  const Vector* val_true = shape.label_skip ? &validation.y_true : nullptr;

  RngStream order_rng = RngStream(config.seed).derive(1);
  RngStream dropout_rng = RngStream(config.seed).derive(2);
  AdamState adam = AdamState::for_params(model.params, AdamConfig{config.learning_rate});

  TrainResult result;
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t since_best = 0;

  Matrix batch_x;
  Vector batch_true;
  Vector batch_target;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const auto rows = static_cast<Eigen::Index>(end - start);
      batch_x.resize(rows, pool.features.cols());
      batch_true.resize(rows);
      batch_target.resize(rows);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]);
        batch_x.row(r) = pool.features.row(src);
        batch_true[r] = pool.y_true[src];
        batch_target[r] = pool.y_target[src];
      }
      const ForwardTrace trace = forward_trace(model.params, shape, batch_x,
                                               pool_true ? &batch_true : nullptr, &dropout_rng);
      loss_sum += trace_loss(trace, batch_target) * static_cast<double>(rows);
      const ParamSet grads = backprop(model.params, shape, trace, batch_target);
      adam_step(model.params, grads, adam);
    }
    if (!model.params.all_finite()) throw KernelError("train: parameters diverged", epoch);

    const Vector val_scores = predict_scores(model.params, shape, validation.features, val_true);
    const double val_acc = accuracy_at_half(val_scores, validation.y_target);
    const double val_loss = bce_loss(std::span<const double>(val_scores.data(), val_scores.size()),
                                     std::span<const double>(validation.y_target.data(), validation.y_target.size()));
    result.log.push_back({epoch, loss_sum / static_cast<double>(pool.size()), val_acc, val_loss});

    if (val_acc > result.best.validation_accuracy) {
      result.best.params = model.params;
      result.best.epoch = epoch;
      result.best.validation_accuracy = val_acc;
      result.best.validation_loss = val_loss;
      since_best = 0;
    } else {
      // Equal accuracy with lower loss moves the checkpoint but not the patience clock.
      if (val_acc == result.best.validation_accuracy && val_loss < result.best.validation_loss) {
        result.best.params = model.params;
        result.best.epoch = epoch;
        result.best.validation_loss = val_loss;
      }
      if (++since_best >= config.patience) break;
    }
  }
  model.params = result.best.params;
  return result;
}

Vector mc_dropout_predict(const SurrogateModel& model, const Matrix& scaled_features,
                          const Vector* true_labels, std::size_t passes, std::uint64_t seed) {
  if (passes == 0) throw ConfigError("mc_dropout_predict: passes must be >= 1");
  const NetworkShape shape = model.shape();
  RngStream rng(seed);
  Vector mean = Vector::Zero(scaled_features.rows());
  for (std::size_t p = 0; p < passes; ++p) {
    mean += forward_trace(model.params, shape, scaled_features, true_labels, &rng).scores;
  }
  return mean / static_cast<double>(passes);
}

std::vector<std::uint8_t> serialize_model(const SurrogateModel& model) {
  const NetworkShape shape = model.shape();
  io::ByteWriter w;
  w.magic(kModelMagic);
  w.u8(static_cast<std::uint8_t>(model.arch.kind));
  w.u32(static_cast<std::uint32_t>(model.arch.input_dim));
  w.u32(static_cast<std::uint32_t>(model.arch.hidden_sizes.size()));
  for (std::size_t h : model.arch.hidden_sizes) w.u32(static_cast<std::uint32_t>(h));
  w.f32(static_cast<float>(model.arch.dropout_rate));
  if (model.params.blocks.size() != shape.block_count()) throw ShapeError("serialize_model: bad params");
  for (const Matrix& block : model.params.blocks) {
    // Row-major within each block.
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      for (Eigen::Index c = 0; c < block.cols(); ++c) w.f32(static_cast<float>(block(r, c)));
    }
  }
  for (Eigen::Index j = 0; j < model.scaler.center.size(); ++j) w.f32(static_cast<float>(model.scaler.center[j]));
  for (Eigen::Index j = 0; j < model.scaler.scale.size(); ++j) w.f32(static_cast<float>(model.scaler.scale[j]));
  w.f64(model.threshold);
  return w.take();
}

SurrogateModel deserialize_model(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "model file");
  r.expect_magic(kModelMagic);
  SurrogateModel m;
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("model file: unknown architecture code " + std::to_string(kind));
  m.arch.kind = static_cast<ArchKind>(kind);
  m.arch.input_dim = r.u32();
  const std::uint32_t layers = r.u32();
  if (layers == 0 || layers > 64) throw FormatError("model file: implausible layer count");
  m.arch.hidden_sizes.clear();
  for (std::uint32_t i = 0; i < layers; ++i) m.arch.hidden_sizes.push_back(r.u32());
  m.arch.dropout_rate = r.f32();
  NetworkShape shape;
  try {
    shape = m.arch.shape();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model file: invalid architecture: ") + e.what());
  }
  r.need(shape.parameter_count() * 4);
  // init_params gives the block shapes; values are overwritten.
  m.params = init_params(shape, 0);
  for (Matrix& block : m.params.blocks) {
    for (Eigen::Index row = 0; row < block.rows(); ++row) {
      for (Eigen::Index c = 0; c < block.cols(); ++c) block(row, c) = r.f32();
    }
  }
  const auto dims = static_cast<Eigen::Index>(m.arch.input_dim);
  m.scaler.center.resize(dims);
  m.scaler.scale.resize(dims);
  for (Eigen::Index j = 0; j < dims; ++j) m.scaler.center[j] = r.f32();
  for (Eigen::Index j = 0; j < dims; ++j) m.scaler.scale[j] = r.f32();
  m.threshold = r.f64();
  if (r.remaining() != 0) throw FormatError("model file: trailing bytes");
  if (!m.params.all_finite()) throw FormatError("model file: non-finite parameter");
  return m;
}

void save_model(const SurrogateModel& model, const std::filesystem::path& path) {
  io::write_file(path, serialize_model(model));
}

SurrogateModel load_model(const std::filesystem::path& path) {
  return deserialize_model(io::read_file(path));
}

}  // namespace extractkit
