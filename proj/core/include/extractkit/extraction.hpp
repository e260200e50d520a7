#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "extractkit/data.hpp"
#include "extractkit/oracles.hpp"
#include "extractkit/sampling.hpp"
#include "extractkit/surrogate.hpp"

namespace extractkit {

inline constexpr double kValidationFraction = 0.2;
inline constexpr double kSeedFraction = 0.1;

struct BudgetPlan {
  std::uint64_t total = 0;
  std::size_t rounds = 0;
  std::uint64_t validation_n = 0;
  std::uint64_t seed_n = 0;
  std::uint64_t per_round_n = 0;
  std::uint64_t final_round_bonus = 0;

  // Queries issued in round r (1-based).
  std::uint64_t round_size(std::size_t r) const noexcept {
    return per_round_n + (r == rounds ? final_round_bonus : 0);
  }
};

// validation = floor(0.2Q), seed = floor(0.1Q), the rest split evenly over R
// rounds with the remainder added to the last one.
BudgetPlan plan_budget(std::uint64_t total, std::size_t rounds);

class BudgetLedger {
 public:
  explicit BudgetLedger(std::uint64_t total) : total_(total) {}
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t spent() const noexcept { return spent_; }
  std::uint64_t remaining() const noexcept { return total_ - spent_; }
  // Throws BudgetError and leaves `spent` unchanged when n exceeds the remainder.
  void charge(std::uint64_t n);

 private:
  std::uint64_t total_;
  std::uint64_t spent_ = 0;
};

// Thief rows labeled by the target so far, in insertion order.
class LabeledPool {
 public:
  explicit LabeledPool(std::size_t thief_size) : labeled_(thief_size, 0) {}

  void add(std::size_t index, std::uint8_t label, std::size_t round);
  bool contains(std::size_t index) const { return labeled_.at(index) != 0; }
  std::size_t size() const noexcept { return indices_.size(); }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }
  const std::vector<std::size_t>& rounds() const noexcept { return rounds_; }

 private:
  std::vector<std::uint8_t> labeled_;
  std::vector<std::size_t> indices_;
  std::vector<std::uint8_t> labels_;
  std::vector<std::size_t> rounds_;
};

// Labels thief rows through the oracle. `used` marks rows labeled earlier in
// the run; duplicates raise ContractError, overdrafts BudgetError, and in both
// cases nothing is sent.
std::vector<std::uint8_t> label_batch(TargetOracle& oracle, const DatasetMatrix& thief,
                                      std::span<const std::size_t> indices, BudgetLedger& ledger,
                                      std::vector<std::uint8_t>& used);

struct RoundReport {
  std::size_t round = 0;
  std::uint64_t queries = 0;  // cumulative, validation included
  double threshold = 0.0;
  double agreement = 0.0;
  double accuracy = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double auc = 0.0;
  double seconds = 0.0;
};

struct ExtractionConfig {
  std::uint64_t budget = 0;
  std::size_t rounds = 1;
  Strategy strategy = Strategy::random;
  ArchitectureConfig arch;  // input_dim is taken from the data
  TrainConfig train;
  double target_fpr = 0.01;
  std::size_t pre_cap = kDefaultPreCap;
  std::size_t mc_passes = kDefaultMcPasses;
  std::uint64_t seed = 0;
  // Wall-clock seconds in reports; off keeps reports byte-reproducible.
  bool record_time = false;
};

struct ExtractionResult {
  SurrogateModel model;
  std::vector<RoundReport> reports;  // round 0 (seed pool) .. rounds
  BudgetPlan plan;
  std::uint64_t queries = 0;    // oracle calls made by the run
  std::uint64_t shortfall = 0;  // round queries not issued because the thief set ran out
};

// Active-learning extraction. `test_target_labels` are the target's labels
// for the test rows; they are obtained outside the run's budget.
ExtractionResult run_extraction(const DatasetMatrix& thief, const DatasetMatrix& test,
                                std::span<const std::uint8_t> test_target_labels, TargetOracle& oracle,
                                const ExtractionConfig& config);

// Surrogate scores for `data` using its y_true as the dualFCNN label input.
Vector surrogate_scores(const SurrogateModel& model, const DatasetMatrix& data);

struct Evaluation {
  RoundReport report;  // round, queries and seconds left at 0
  Vector scores;
};

// Calibrates the threshold on `test` at target_fpr (against y_true), then
// scores agreement with the target labels and accuracy/TPR/FPR/AUC against y_true.
Evaluation evaluate_surrogate(const SurrogateModel& model, const DatasetMatrix& test,
                              std::span<const std::uint8_t> test_target_labels, double target_fpr);

void write_rounds_csv(const std::vector<RoundReport>& reports, const std::filesystem::path& path);
std::vector<RoundReport> read_rounds_csv(const std::filesystem::path& path);

}  // namespace extractkit
