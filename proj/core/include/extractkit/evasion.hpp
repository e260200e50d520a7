#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "extractkit/oracles.hpp"
#include "extractkit/rng.hpp"

namespace extractkit {

// Sparse additive perturbation.
struct Action {
  std::string name;
  std::vector<std::pair<std::size_t, double>> delta;
};

class ActionCatalog {
 public:
  ActionCatalog(std::size_t dims, std::vector<std::size_t> monotone, std::vector<Action> actions);

  std::size_t dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return actions_.size(); }
  const Action& operator[](std::size_t i) const { return actions_.at(i); }
  const std::vector<Action>& actions() const noexcept { return actions_; }
  bool is_monotone(std::size_t dim) const { return monotone_.at(dim) != 0; }
  // True when the action never lowers a monotone feature.
  bool feasible(std::size_t action) const;

 private:
  std::size_t dims_;
  std::vector<std::uint8_t> monotone_;
  std::vector<Action> actions_;
};

struct RandomCatalogConfig {
  std::size_t actions = 10;
  std::size_t nonzeros = 4;  // touched features per action
  double scale = 0.5;
  std::uint64_t seed = 0;
};

// Actions touch random dims; monotone dims get |delta|.
ActionCatalog make_random_catalog(std::size_t dims, std::vector<std::size_t> monotone, const RandomCatalogConfig& cfg);

struct AdversarialSample {
  std::vector<float> base;
  std::vector<std::size_t> actions;  // in application order
  std::vector<float> current;
  bool evasive = false;
  std::uint64_t queries = 0;  // model queries spent on this sample
};

AdversarialSample make_sample(std::span<const float> base);

// base + the deltas of the applied actions, summed in catalog order so the
// result does not depend on application order.
std::vector<float> compose(std::span<const float> base, const std::vector<std::size_t>& actions,
                           const ActionCatalog& catalog);

// Throws FeasibilityError (sample untouched) if a monotone feature would drop.
void apply_action(AdversarialSample& sample, std::size_t action, const ActionCatalog& catalog);

// Per-action Beta posterior.
class BanditState {
 public:
  explicit BanditState(std::size_t arms, double alpha0 = 1.0, double beta0 = 1.0);

  std::size_t arms() const noexcept { return alpha_.size(); }
  // Thompson draw; ties go to the lowest arm. Every arm consumes its draw, and
  // arms with allowed[a] == 0 cannot win.
  std::size_t choose(RngStream& rng, const std::vector<std::uint8_t>* allowed = nullptr) const;
  void update(std::size_t arm, int reward);
  double mean(std::size_t arm) const { return alpha_.at(arm) / (alpha_.at(arm) + beta_.at(arm)); }
  double alpha(std::size_t arm) const { return alpha_.at(arm); }
  double beta(std::size_t arm) const { return beta_.at(arm); }
  std::uint64_t pulls(std::size_t arm) const { return pulls_.at(arm); }

 private:
  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::vector<std::uint64_t> pulls_;
};

inline constexpr std::size_t kDefaultMaxPulls = 60;

// Stage 1: pull bandit-chosen actions until `model` labels the sample 0 or
// max_pulls is reached. Only feasible actions are drawn. Failures keep their
// perturbed vector, evasive = false.
AdversarialSample stage1_evade(std::span<const float> base, TargetOracle& model, const ActionCatalog& catalog,
                               BanditState& bandit, std::size_t max_pulls, RngStream& rng);

// Stage 2: drop actions (most recent first) while the sample stays evasive,
// repeated until no single removal keeps it evasive.
AdversarialSample stage2_minimize(const AdversarialSample& adv, TargetOracle& model, const ActionCatalog& catalog);

struct EvasionConfig {
  std::size_t max_pulls = kDefaultMaxPulls;
  std::uint64_t seed = 0;
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
};

struct CampaignResult {
  std::vector<AdversarialSample> evasive;    // stage-1 output, one per base row
  std::vector<AdversarialSample> minimized;  // stage-2 output (failures copied through)
  BanditState bandit{1};
  std::size_t successes = 0;
  std::uint64_t queries = 0;
};

// Runs both stages over every base row with one shared bandit.
CampaignResult run_campaign(const FeatureRows& base, TargetOracle& generator, const ActionCatalog& catalog,
                            const EvasionConfig& config);

struct NamedRows {
  std::string name;
  std::vector<float> rows;  // row-major
};

struct NamedOracle {
  std::string name;
  TargetOracle* oracle;
};

struct TransferMatrix {
  std::vector<std::string> generators;  // "baseline" first
  std::vector<std::string> targets;
  std::vector<std::vector<double>> rates;  // [generator][target] detection rate
};

std::vector<float> current_rows(const std::vector<AdversarialSample>& samples);

TransferMatrix transfer_matrix(const FeatureRows& base, const std::vector<NamedRows>& adversarial_sets,
                               const std::vector<NamedOracle>& targets);

void write_transfer_csv(const TransferMatrix& matrix, const std::filesystem::path& path);

}  // namespace extractkit
