#include "extractkit/extraction.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "extractkit/errors.hpp"
#include "extractkit/metrics.hpp"
#include "extractkit/rng.hpp"

namespace extractkit {

BudgetPlan plan_budget(std::uint64_t total, std::size_t rounds) {
  if (rounds == 0) throw ConfigError("plan_budget: rounds must be >= 1");
  BudgetPlan p;
  p.total = total;
  p.rounds = rounds;
  p.validation_n = total / 5;
  p.seed_n = total / 10;
  if (total < rounds + 3 || p.validation_n == 0 || p.seed_n == 0) {
    throw ConfigError("plan_budget: budget " + std::to_string(total) + " too small for " + std::to_string(rounds) +
                      " rounds (need at least one validation, seed and per-round query)");
  }
  const std::uint64_t rest = total - p.validation_n - p.seed_n;
  p.per_round_n = rest / rounds;
  if (p.per_round_n == 0) {
    throw ConfigError("plan_budget: budget " + std::to_string(total) + " leaves no queries per round");
  }
  p.final_round_bonus = rest - p.per_round_n * rounds;
  return p;
}

void BudgetLedger::charge(std::uint64_t n) {
  if (n > remaining()) {
    throw BudgetError("query budget exceeded: " + std::to_string(n) + " requested, " + std::to_string(remaining()) +
                      " of " + std::to_string(total_) + " left");
  }
  spent_ += n;
}

void LabeledPool::add(std::size_t index, std::uint8_t label, std::size_t round) {
  if (index >= labeled_.size()) throw ShapeError("labeled pool: index out of range");
  if (labeled_[index] != 0) throw ContractError("labeled pool: index " + std::to_string(index) + " already labeled");
  if (label > 1) throw ContractError("labeled pool: non-binary label");
  labeled_[index] = 1;
  indices_.push_back(index);
  labels_.push_back(label);
  rounds_.push_back(round);
}

std::vector<std::uint8_t> label_batch(TargetOracle& oracle, const DatasetMatrix& thief,
                                      std::span<const std::size_t> indices, BudgetLedger& ledger,
                                      std::vector<std::uint8_t>& used) {
  if (used.size() != thief.n) throw ShapeError("label_batch: usage mask does not match the thief set");
  std::vector<std::uint8_t> in_batch(thief.n, 0);
  for (std::size_t i : indices) {
    if (i >= thief.n) throw ShapeError("label_batch: index out of range");
    if (used[i] != 0 || in_batch[i] != 0) {
      throw ContractError("label_batch: thief row " + std::to_string(i) + " would be labeled twice");
    }
    in_batch[i] = 1;
  }
  ledger.charge(indices.size());
  for (std::size_t i : indices) used[i] = 1;
  const std::vector<float> rows = gather_rows(thief, indices);
  return oracle.label(FeatureRows(rows.data(), indices.size(), thief.d));
}

Vector surrogate_scores(const SurrogateModel& model, const DatasetMatrix& data) {
  const Matrix x = data.to_matrix();
  if (model.needs_true_label()) {
    const Vector y = data.labels_as_vector();
    return score_raw(model, x, &y);
  }
  return score_raw(model, x);
}

Evaluation evaluate_surrogate(const SurrogateModel& model, const DatasetMatrix& test,
                              std::span<const std::uint8_t> test_target_labels, double target_fpr) {
  if (test_target_labels.size() != test.n) throw ShapeError("evaluate: one target label per test row needed");
  Evaluation e;
  e.scores = surrogate_scores(model, test);
  const std::span<const double> scores(e.scores.data(), static_cast<std::size_t>(e.scores.size()));
  RoundReport& r = e.report;
  r.threshold = threshold_for_fpr(scores, test.y_true, target_fpr);
  const Confusion conf = confusion_at_threshold(scores, test.y_true, r.threshold);
  r.agreement = agreement(labels_at_threshold(scores, r.threshold), test_target_labels);
  r.accuracy = conf.accuracy;
  r.tpr = conf.tpr;
  r.fpr = conf.fpr;
  r.auc = roc_curve(scores, test.y_true).auc;
  return e;
}

namespace {

TrainingSet make_training_set(const DatasetMatrix& thief, const RobustScalerParams& scaler,
                              std::span<const std::size_t> rows, std::span<const std::uint8_t> targets) {
  TrainingSet set;
  set.features = apply_robust_scaler(scaler, thief.to_matrix(rows));
  set.y_true.resize(static_cast<Eigen::Index>(rows.size()));
  set.y_target.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    set.y_true[static_cast<Eigen::Index>(i)] = thief.y_true[rows[i]];
    set.y_target[static_cast<Eigen::Index>(i)] = targets[i];
  }
  return set;
}

Vector labels_of(const DatasetMatrix& data, std::span<const std::size_t> rows) {
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y[static_cast<Eigen::Index>(i)] = data.y_true[rows[i]];
  return y;
}

enum : std::uint64_t {
  kTagValidation = 1,
  kTagSeedPool = 2,
  kTagModel = 0x100,
  kTagTrain = 0x200,
  kTagStrategy = 0x300,
};

}  // namespace

ExtractionResult run_extraction(const DatasetMatrix& thief, const DatasetMatrix& test,
                                std::span<const std::uint8_t> test_target_labels, TargetOracle& oracle,
                                const ExtractionConfig& config) {
  thief.validate();
  test.validate();
  if (thief.d != test.d) throw ShapeError("run_extraction: thief and test feature widths differ");
  if (oracle.dims() != thief.d) throw ShapeError("run_extraction: oracle width differs from the data");
  if (test_target_labels.size() != test.n) throw ShapeError("run_extraction: one target label per test row needed");
  if (config.budget > thief.n) {
    throw ConfigError("run_extraction: budget " + std::to_string(config.budget) + " exceeds thief set size " +
                      std::to_string(thief.n));
  }
  if (!(config.target_fpr >= 0.0 && config.target_fpr <= 1.0)) throw ConfigError("run_extraction: fpr outside [0,1]");
  config.train.validate();

  ExtractionResult result;
  result.plan = plan_budget(config.budget, config.rounds);
  const BudgetPlan& plan = result.plan;
  spdlog::info("budget plan: validation {} seed {} per round {} (+{} in the last round)", plan.validation_n,
               plan.seed_n, plan.per_round_n, plan.final_round_bonus);

  const RngStream root(config.seed);
  const std::uint64_t oracle_start = oracle.query_count();
  BudgetLedger ledger(config.budget);
  std::vector<std::uint8_t> used(thief.n, 0);
  LabeledPool pool(thief.n);

  RngStream validation_rng = root.derive(kTagValidation);
  const std::vector<std::size_t> validation_rows =
      sample_without_replacement(thief.n, static_cast<std::size_t>(plan.validation_n), validation_rng);
  const std::vector<std::uint8_t> validation_labels = label_batch(oracle, thief, validation_rows, ledger, used);

  auto unlabeled = [&] {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < thief.n; ++i) {
      if (used[i] == 0) out.push_back(i);
    }
    return out;
  };

  {
    RngStream seed_rng = root.derive(kTagSeedPool);
    const auto candidates = unlabeled();
    const QuerySelection sel = select_random(candidates, static_cast<std::size_t>(plan.seed_n), seed_rng);
    const auto labels = label_batch(oracle, thief, sel.indices, ledger, used);
    for (std::size_t i = 0; i < labels.size(); ++i) pool.add(sel.indices[i], labels[i], 0);
  }

  ArchitectureConfig arch = config.arch;
  arch.input_dim = thief.d;

  for (std::size_t round = 0; round <= config.rounds; ++round) {
    const auto started = std::chrono::steady_clock::now();
    const RobustScalerParams scaler = fit_robust_scaler(thief.to_matrix(pool.indices()));
    const TrainingSet train_set = make_training_set(thief, scaler, pool.indices(), pool.labels());
    const TrainingSet validation_set = make_training_set(thief, scaler, validation_rows, validation_labels);

    SurrogateModel model = build_model(arch, root.derive(kTagModel + round).seed());
    model.scaler = scaler;
    TrainConfig train_cfg = config.train;
    train_cfg.seed = root.derive(kTagTrain + round).seed();
    const TrainResult trained = train(model, train_set, validation_set, train_cfg);

    const Evaluation eval = evaluate_surrogate(model, test, test_target_labels, config.target_fpr);
    model.threshold = eval.report.threshold;
    RoundReport report = eval.report;
    report.round = round;
    report.queries = ledger.spent();
    spdlog::info("round {}: pool {} queries {} best epoch {} agreement {:.4f} accuracy {:.4f}", round, pool.size(),
                 report.queries, trained.best.epoch, report.agreement, report.accuracy);

    if (round < config.rounds) {
      const std::size_t wanted = static_cast<std::size_t>(plan.round_size(round + 1));
      const std::vector<std::size_t> candidates = unlabeled();
      const std::size_t n = std::min(wanted, candidates.size());
      if (n < wanted) {
        result.shortfall += wanted - n;
        spdlog::warn("round {}: only {} unlabeled thief rows left, {} queries not issued", round + 1,
                     candidates.size(), wanted - n);
      }
      RngStream strategy_rng = root.derive(kTagStrategy + round);
      QuerySelection sel;
      switch (config.strategy) {
        case Strategy::random:
          sel = select_random(candidates, n, strategy_rng);
          break;
        case Strategy::entropy:
        case Strategy::entropy_kmedoids: {
          const Matrix scaled = apply_robust_scaler(scaler, thief.to_matrix(candidates));
          const Vector y = labels_of(thief, candidates);
          const Vector s = forward_batch(model, scaled, model.needs_true_label() ? &y : nullptr);
          PredictionBatch batch{candidates, {s.data(), s.data() + s.size()}};
          if (config.strategy == Strategy::entropy) {
            sel = select_entropy(batch, n);
          } else {
            const Matrix all_scaled = apply_robust_scaler(scaler, thief.to_matrix());
            sel = select_entropy_kmedoids(batch, all_scaled, n, config.pre_cap, strategy_rng);
          }
          break;
        }
        case Strategy::mcdropout_entropy: {
          const Matrix scaled = apply_robust_scaler(scaler, thief.to_matrix(candidates));
          const Vector y = labels_of(thief, candidates);
          sel = select_mcdropout_entropy(model, scaled, model.needs_true_label() ? &y : nullptr, candidates, n,
                                         config.mc_passes, strategy_rng.seed());
          break;
        }
      }
      if (sel.indices.size() != n) {
        throw ContractError("strategy " + std::string(to_string(config.strategy)) + " returned " +
                            std::to_string(sel.indices.size()) + " rows, expected " + std::to_string(n));
      }
      for (std::size_t i : sel.indices) {
        if (i >= thief.n || used[i] != 0) {
          throw ContractError("strategy " + std::string(to_string(config.strategy)) +
                              " selected an already-labeled row " + std::to_string(i));
        }
      }
      const auto labels = label_batch(oracle, thief, sel.indices, ledger, used);
      for (std::size_t i = 0; i < labels.size(); ++i) pool.add(sel.indices[i], labels[i], round + 1);
    }

    if (config.record_time) {
      report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    result.reports.push_back(report);
    if (round == config.rounds) result.model = std::move(model);
  }

  result.queries = oracle.query_count() - oracle_start;
  return result;
}

namespace {

constexpr const char* kRoundsHeader = "round,queries,threshold,agreement,accuracy,tpr,fpr,auc,seconds";

}  // namespace

void write_rounds_csv(const std::vector<RoundReport>& reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << kRoundsHeader << '\n';
  char line[512];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%zu,%llu,%.17g,%.6f,%.6f,%.6f,%.6f,%.6f,%.3f\n", r.round,
                  static_cast<unsigned long long>(r.queries), r.threshold, r.agreement, r.accuracy, r.tpr, r.fpr,
                  r.auc, r.seconds);
    out << line;
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<RoundReport> read_rounds_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRoundsHeader) {
    throw FormatError(path.string() + ": expected header \"" + std::string(kRoundsHeader) + "\"");
  }
  std::vector<RoundReport> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    RoundReport r;
    unsigned long long queries = 0;
    if (std::sscanf(line.c_str(), "%zu,%llu,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &r.round, &queries, &r.threshold,
                    &r.agreement, &r.accuracy, &r.tpr, &r.fpr, &r.auc, &r.seconds) != 9) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    r.queries = queries;
    out.push_back(r);
  }
  return out;
}

}  // namespace extractkit
