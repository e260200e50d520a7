#include "extractkit/evasion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "extractkit/errors.hpp"
#include "extractkit/metrics.hpp"

namespace extractkit {

ActionCatalog::ActionCatalog(std::size_t dims, std::vector<std::size_t> monotone, std::vector<Action> actions)
    : dims_(dims), monotone_(dims, 0), actions_(std::move(actions)) {
  if (dims == 0) throw ConfigError("action catalog: dims must be >= 1");
  for (std::size_t m : monotone) {
    if (m >= dims) throw ConfigError("action catalog: monotone index out of range");
    monotone_[m] = 1;
  }
  for (const auto& a : actions_) {
    for (const auto& [dim, value] : a.delta) {
      if (dim >= dims) throw ConfigError("action catalog: action \"" + a.name + "\" touches dim out of range");
      if (!std::isfinite(value)) throw ConfigError("action catalog: action \"" + a.name + "\" is not finite");
    }
  }
}

bool ActionCatalog::feasible(std::size_t action) const {
  for (const auto& [dim, value] : (*this)[action].delta) {
    if (monotone_[dim] != 0 && value < 0.0) return false;
  }
  return true;
}

ActionCatalog make_random_catalog(std::size_t dims, std::vector<std::size_t> monotone, const RandomCatalogConfig& cfg) {
  if (cfg.nonzeros == 0 || cfg.nonzeros > dims) throw ConfigError("random catalog: nonzeros must be in [1, dims]");
  if (!(cfg.scale > 0.0)) throw ConfigError("random catalog: scale must be > 0");
  std::vector<std::uint8_t> is_monotone(dims, 0);
  for (std::size_t m : monotone) {
    if (m >= dims) throw ConfigError("random catalog: monotone index out of range");
    is_monotone[m] = 1;
  }
  RngStream rng(cfg.seed);
  std::vector<Action> actions;
  for (std::size_t a = 0; a < cfg.actions; ++a) {
    Action action{"a" + std::to_string(a), {}};
    auto dims_hit = sample_without_replacement(dims, cfg.nonzeros, rng);
    std::sort(dims_hit.begin(), dims_hit.end());
    for (std::size_t d : dims_hit) {
      double v = cfg.scale * rng.normal();
      if (is_monotone[d] != 0) v = std::abs(v);
      action.delta.emplace_back(d, v);
    }
    actions.push_back(std::move(action));
  }
  return ActionCatalog(dims, std::move(monotone), std::move(actions));
}

AdversarialSample make_sample(std::span<const float> base) {
  AdversarialSample s;
  s.base.assign(base.begin(), base.end());
  s.current = s.base;
  return s;
}

std::vector<float> compose(std::span<const float> base, const std::vector<std::size_t>& actions,
                           const ActionCatalog& catalog) {
  if (base.size() != catalog.dims()) throw ShapeError("compose: sample width differs from the catalog");
  std::vector<std::size_t> counts(catalog.size(), 0);
  for (std::size_t a : actions) {
    if (a >= catalog.size()) throw ConfigError("compose: unknown action " + std::to_string(a));
    ++counts[a];
  }
  std::vector<double> acc(base.begin(), base.end());
  for (std::size_t a = 0; a < catalog.size(); ++a) {
    if (counts[a] == 0) continue;
    for (const auto& [dim, value] : catalog[a].delta) acc[dim] += static_cast<double>(counts[a]) * value;
  }
  return {acc.begin(), acc.end()};
}

void apply_action(AdversarialSample& sample, std::size_t action, const ActionCatalog& catalog) {
  if (action >= catalog.size()) throw ConfigError("apply_action: unknown action " + std::to_string(action));
  if (!catalog.feasible(action)) {
    throw FeasibilityError("apply_action: \"" + catalog[action].name + "\" would decrease a monotone feature");
  }
  std::vector<std::size_t> actions = sample.actions;
  actions.push_back(action);
  std::vector<float> next = compose(sample.base, actions, catalog);
  for (std::size_t d = 0; d < next.size(); ++d) {
    if (catalog.is_monotone(d) && next[d] < sample.base[d]) {
      throw FeasibilityError("apply_action: monotone feature " + std::to_string(d) + " below its base value");
    }
  }
  sample.actions = std::move(actions);
  sample.current = std::move(next);
}

BanditState::BanditState(std::size_t arms, double alpha0, double beta0)
    : alpha_(arms, alpha0), beta_(arms, beta0), pulls_(arms, 0) {
  if (arms == 0) throw ConfigError("bandit: need at least one arm");
  if (!(alpha0 >= 1.0 && beta0 >= 1.0)) throw ConfigError("bandit: priors must be >= 1");
}

std::size_t BanditState::choose(RngStream& rng, const std::vector<std::uint8_t>* allowed) const {
  if (allowed != nullptr && allowed->size() != alpha_.size()) throw ConfigError("bandit: mask size differs from arms");
  std::size_t best = alpha_.size();
  double best_draw = -1.0;
  for (std::size_t a = 0; a < alpha_.size(); ++a) {
    const double draw = rng.beta(alpha_[a], beta_[a]);
    if (allowed != nullptr && (*allowed)[a] == 0) continue;
    if (draw > best_draw) {
      best_draw = draw;
      best = a;
    }
  }
  if (best == alpha_.size()) throw ConfigError("bandit: no allowed arm");
  return best;
}

void BanditState::update(std::size_t arm, int reward) {
  if (reward != 0 && reward != 1) throw ConfigError("bandit: reward must be 0 or 1");
  ++pulls_.at(arm);
  (reward == 1 ? alpha_ : beta_)[arm] += 1.0;
}

AdversarialSample stage1_evade(std::span<const float> base, TargetOracle& model, const ActionCatalog& catalog,
                               BanditState& bandit, std::size_t max_pulls, RngStream& rng) {
  if (bandit.arms() != catalog.size()) throw ConfigError("stage1: bandit arms differ from catalog size");
  AdversarialSample s = make_sample(base);
  s.queries = 1;
  if (model.label_one(s.current) == 0) {
    s.evasive = true;
    return s;
  }
  std::vector<std::uint8_t> feasible(catalog.size(), 0);
  for (std::size_t a = 0; a < catalog.size(); ++a) feasible[a] = catalog.feasible(a) ? 1 : 0;
  if (std::find(feasible.begin(), feasible.end(), 1) == feasible.end()) return s;
  for (std::size_t pull = 0; pull < max_pulls; ++pull) {
    const std::size_t a = bandit.choose(rng, &feasible);
    apply_action(s, a, catalog);
    ++s.queries;
    const int reward = model.label_one(s.current) == 0 ? 1 : 0;
    bandit.update(a, reward);
    if (reward == 1) {
      s.evasive = true;
      break;
    }
  }
  return s;
}

AdversarialSample stage2_minimize(const AdversarialSample& adv, TargetOracle& model, const ActionCatalog& catalog) {
  AdversarialSample s = adv;
  s.queries = 0;
  ++s.queries;
  if (model.label_one(compose(s.base, s.actions, catalog)) != 0) {
    throw ContractError("stage2: sample is not evasive against its generator");
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = s.actions.size(); i-- > 0;) {
      std::vector<std::size_t> trial = s.actions;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
      const std::vector<float> x = compose(s.base, trial, catalog);
      ++s.queries;
      if (model.label_one(x) == 0) {
        s.actions = std::move(trial);
        changed = true;
      }
    }
  }
  s.current = compose(s.base, s.actions, catalog);
  s.evasive = true;
  return s;
}

CampaignResult run_campaign(const FeatureRows& base, TargetOracle& generator, const ActionCatalog& catalog,
                            const EvasionConfig& config) {
  if (base.cols != catalog.dims()) throw ShapeError("campaign: base width differs from the catalog");
  CampaignResult out;
  out.bandit = BanditState(catalog.size(), config.prior_alpha, config.prior_beta);
  RngStream rng(config.seed);
  const std::uint64_t start = generator.query_count();
  for (std::size_t i = 0; i < base.rows; ++i) {
    AdversarialSample s = stage1_evade(base.row(i), generator, catalog, out.bandit, config.max_pulls, rng);
    if (s.evasive) {
      ++out.successes;
      out.minimized.push_back(stage2_minimize(s, generator, catalog));
    } else {
      out.minimized.push_back(s);
    }
    out.evasive.push_back(std::move(s));
  }
  out.queries = generator.query_count() - start;
  return out;
}

std::vector<float> current_rows(const std::vector<AdversarialSample>& samples) {
  std::vector<float> out;
  for (const auto& s : samples) out.insert(out.end(), s.current.begin(), s.current.end());
  return out;
}

TransferMatrix transfer_matrix(const FeatureRows& base, const std::vector<NamedRows>& adversarial_sets,
                               const std::vector<NamedOracle>& targets) {
  TransferMatrix m;
  for (const auto& t : targets) {
    if (t.oracle == nullptr) throw ConfigError("transfer matrix: missing target " + t.name);
    if (t.oracle->dims() != base.cols) throw ShapeError("transfer matrix: target " + t.name + " width mismatch");
    m.targets.push_back(t.name);
  }
  auto row_for = [&](const FeatureRows& rows) {
    std::vector<double> r;
    for (const auto& t : targets) r.push_back(detection_rate(t.oracle->label(rows)));
    return r;
  };
  m.generators.push_back("baseline");
  m.rates.push_back(row_for(base));
  for (const auto& set : adversarial_sets) {
    const FeatureRows rows(set.rows, base.cols);
    if (rows.rows != base.rows) {
      throw ShapeError("transfer matrix: set " + set.name + " is not built from the same base samples");
    }
    m.generators.push_back(set.name);
    m.rates.push_back(row_for(rows));
  }
  return m;
}

void write_transfer_csv(const TransferMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "generator";
  for (const auto& t : matrix.targets) out << ',' << t;
  out << '\n';
  char cell[32];
  for (std::size_t g = 0; g < matrix.generators.size(); ++g) {
    out << matrix.generators[g];
    for (double v : matrix.rates[g]) {
      std::snprintf(cell, sizeof cell, ",%.4f", v);
      out << cell;
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace extractkit
