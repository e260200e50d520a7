#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "extractkit/numkit.hpp"
#include "extractkit/planted.hpp"
#include "extractkit/surrogate.hpp"

namespace extractkit {

struct DatasetMatrix;

// Non-owning row-major float view.
struct FeatureRows {
  const float* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  FeatureRows() = default;
  FeatureRows(const float* d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {}
  FeatureRows(std::span<const float> flat, std::size_t c);
  explicit FeatureRows(const DatasetMatrix& m);

  std::span<const float> row(std::size_t i) const noexcept { return {data + i * cols, cols}; }
  FeatureRows slice(std::size_t first, std::size_t count) const noexcept {
    return {data + first * cols, count, cols};
  }
};

// Gathers the given rows of `m` into a contiguous buffer.
std::vector<float> gather_rows(const DatasetMatrix& m, std::span<const std::size_t> rows);

// Hard-label black box. label() counts every sample it answers.
class TargetOracle {
 public:
  virtual ~TargetOracle() = default;

  virtual std::size_t dims() const = 0;

  std::vector<std::uint8_t> label(const FeatureRows& x);
  std::uint8_t label_one(std::span<const float> x);

  std::uint64_t query_count() const noexcept { return queries_.load(); }

 protected:
  // Called with a dimension-checked, non-empty batch.
  virtual std::vector<std::uint8_t> label_rows(const FeatureRows& x);
  virtual std::uint8_t classify(std::span<const float> x) const = 0;

  // Oracles that may fail part-way through a batch count answered samples
  // themselves through add_queries().
  explicit TargetOracle(bool self_counting = false) : self_counting_(self_counting) {}
  void add_queries(std::uint64_t n) noexcept { queries_ += n; }

 private:
  std::atomic<std::uint64_t> queries_{0};
  bool self_counting_;
};

// Real-valued scoring function in [0, 1] behind an NnTarget.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::size_t dims() const = 0;
  virtual std::vector<double> score(const FeatureRows& x) const = 0;
};

// sigmoid(w . x + b)
class LinearScorer final : public Scorer {
 public:
  LinearScorer(Vector weights, double bias);
  std::size_t dims() const override { return static_cast<std::size_t>(weights_.size()); }
  std::vector<double> score(const FeatureRows& x) const override;
  const Vector& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }

 private:
  Vector weights_;
  double bias_;
};

// A trained surrogate on raw features. dualFCNN models need a y_true input;
// `assumed_label` is fed for every row.
class SurrogateScorer final : public Scorer {
 public:
  explicit SurrogateScorer(SurrogateModel model, int assumed_label = 1);
  std::size_t dims() const override { return model_.arch.input_dim; }
  std::vector<double> score(const FeatureRows& x) const override;
  const SurrogateModel& model() const noexcept { return model_; }

 private:
  SurrogateModel model_;
  int assumed_label_;
};

// label = 1 iff score >= threshold.
class NnTarget final : public TargetOracle {
 public:
  NnTarget(std::shared_ptr<const Scorer> scorer, double threshold);
  std::size_t dims() const override { return scorer_->dims(); }
  double threshold() const noexcept { return threshold_; }
  const Scorer& scorer() const noexcept { return *scorer_; }

 protected:
  std::vector<std::uint8_t> label_rows(const FeatureRows& x) override;
  std::uint8_t classify(std::span<const float> x) const override;

 private:
  std::shared_ptr<const Scorer> scorer_;
  double threshold_;
};

class PlantedOracle final : public TargetOracle {
 public:
  explicit PlantedOracle(PlantedTarget target) : target_(std::move(target)) {}
  std::size_t dims() const override { return target_.ground_truth().dims(); }
  const PlantedTarget& target() const noexcept { return target_; }

 protected:
  std::uint8_t classify(std::span<const float> x) const override { return target_.label(x); }

 private:
  PlantedTarget target_;
};

class ConstantOracle final : public TargetOracle {
 public:
  ConstantOracle(std::size_t dims, std::uint8_t value) : dims_(dims), value_(value) {}
  std::size_t dims() const override { return dims_; }

 protected:
  std::uint8_t classify(std::span<const float>) const override { return value_; }

 private:
  std::size_t dims_;
  std::uint8_t value_;
};

struct RemoteOracleConfig {
  std::chrono::milliseconds timeout{10000};
  std::size_t chunk_size = 512;
  std::size_t retries = 3;
  std::chrono::milliseconds retry_backoff{50};
};

// Client for the scan service. Refusals (429) raise BudgetError, exhausted
// retries raise TransportError.
class RemoteOracle final : public TargetOracle {
 public:
  RemoteOracle(std::string endpoint, std::size_t dims, RemoteOracleConfig config = {});
  ~RemoteOracle() override;
  std::size_t dims() const override { return dims_; }
  const std::string& endpoint() const noexcept { return endpoint_; }

  // Server-side counter from GET /stats.
  std::uint64_t server_queries() const;

 protected:
  std::vector<std::uint8_t> label_rows(const FeatureRows& x) override;
  std::uint8_t classify(std::span<const float> x) const override;

 private:
  std::string post(const std::string& body) const;

  std::string endpoint_;
  std::size_t dims_;
  RemoteOracleConfig config_;
};

}  // namespace extractkit
