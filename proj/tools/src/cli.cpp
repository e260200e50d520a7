#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "extractkit/config.hpp"
#include "extractkit/data.hpp"
#include "extractkit/errors.hpp"
#include "extractkit/evasion.hpp"
#include "extractkit/extraction.hpp"
#include "extractkit/metrics.hpp"
#include "extractkit/oracle_service.hpp"
#include "extractkit/planted.hpp"
#include "extractkit/report.hpp"
#include "extractkit/targets.hpp"

namespace extractkit::cli {

namespace fs = std::filesystem;

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

std::string flag_name(std::string_view key) {
  std::string s(key);
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

// Collects --config and the per-key flags of one subcommand.
struct Options {
  CLI::App* app = nullptr;
  std::string config_path;
  std::vector<std::string> keys;
  std::map<std::string, std::string> text;
  std::map<std::string, bool> flags;

  Options(CLI::App* sub, std::vector<std::string> k) : app(sub), keys(std::move(k)) {
    app->add_option("--config", config_path, "key = value config file; flags override it");
    for (const auto& key : keys) {
      const KeySpec& spec = ExperimentConfig::spec(key);
      const std::string help = std::string(spec.help) + " [" + std::string(spec.default_value) + "]";
      if (spec.type == KeyType::boolean) {
        app->add_flag(flag_name(key), flags[key], help);
      } else {
        app->add_option(flag_name(key), text[key], help);
      }
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig() : ExperimentConfig::load(config_path);
    for (const auto& key : keys) {
      if (app->count(flag_name(key)) == 0) continue;
      if (ExperimentConfig::spec(key).type == KeyType::boolean) {
        cfg.set(key, flags.at(key) ? "true" : "false");
      } else {
        cfg.set(key, text.at(key));
      }
    }
    return cfg;
  }
};

const std::vector<std::string> kTrainKeys = {"arch", "hidden", "dropout", "epochs", "patience", "batch", "lr"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string required_path(const ExperimentConfig& cfg, std::string_view key) {
  const std::string& p = cfg.get(key);
  if (p.empty()) throw ConfigError(flag_name(key) + " is required");
  return p;
}

fs::path prepare_out(const ExperimentConfig& cfg) {
  const fs::path out = cfg.get("out");
  fs::create_directories(out);
  cfg.save(out / kConfigFile);
  return out;
}

std::vector<std::size_t> size_list(const ExperimentConfig& cfg, std::string_view key) {
  std::vector<std::size_t> out;
  for (std::int64_t v : cfg.get_int_list(key)) {
    if (v < 0) throw ConfigError(flag_name(key) + " entries must be >= 0");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

int cmd_gen_data(const ExperimentConfig& cfg) {
  SyntheticGenConfig g;
  g.n = static_cast<std::size_t>(cfg.get_u64("n"));
  g.d = static_cast<std::size_t>(cfg.get_u64("dims"));
  g.balance = cfg.get_real("balance");
  g.clusters_per_class = static_cast<std::size_t>(cfg.get_u64("clusters"));
  g.spread = cfg.get_real("spread");
  g.monotone_features = size_list(cfg, "monotone");
  g.timestamps = cfg.get_bool("timestamps");
  g.seed = cfg.get_u64("seed");
  const double fraction = cfg.get_real("thief_fraction");
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("--thief-fraction must be in (0,1)");
  const SyntheticDataset ds = gen_synthetic(g);
  const DatasetSplit split = split_dataset(ds.data, SplitFraction{fraction, g.seed});
  const fs::path out = prepare_out(cfg);
  save_dataset(ds.data, out / "dataset.xdsm");
  save_dataset(split.thief, out / "thief.xdsm");
  save_dataset(split.test, out / "test.xdsm");
  spdlog::info("wrote {} rows x {} features: thief {} / test {} in {}", ds.data.n, ds.data.d, split.thief.n,
               split.test.n, out.string());
  return kOk;
}

int cmd_train_target(const ExperimentConfig& cfg) {
  const DatasetMatrix data = load_dataset(required_path(cfg, "data"));
  const std::string kind = cfg.get("kind");
  const std::uint64_t seed = cfg.get_u64("seed");
  if (kind == "planted") {
    const Matrix x = data.to_matrix();
    PlantedTreeConfig pc;
    pc.dims = data.d;
    pc.depth = static_cast<std::size_t>(cfg.get_u64("depth"));
    pc.seed = seed;
    pc.feature_pool = static_cast<std::size_t>(cfg.get_u64("pool"));
    const PlantedTree tree = make_planted_tree(pc, PlantedReference{&x, &data.y_true});
    const PlantedTarget target(tree, cfg.get_real("rho"), seed);
    const fs::path out = prepare_out(cfg);
    save_planted_tree(tree, out / "target.json");
    spdlog::info("planted tree: {} leaves, {} flipped; use --target planted:{},rho={},seed={}", tree.leaf_count(),
                 target.flipped_count(), (out / "target.json").string(), cfg.get("rho"), seed);
    return kOk;
  }
  if (kind != "nn") throw ConfigError("--kind must be nn or planted");

  ExtractionConfig ec = cfg.extraction(seed);
  ec.arch.input_dim = data.d;
  const DatasetSplit split = split_dataset(data, SplitFraction{0.8, seed});
  SurrogateModel model = build_model(ec.arch, seed);
  model.scaler = fit_robust_scaler(split.thief.to_matrix());
  auto make_set = [&](const DatasetMatrix& part) {
    TrainingSet set;
    set.features = apply_robust_scaler(model.scaler, part.to_matrix());
    set.y_true = part.labels_as_vector();
    set.y_target = set.y_true;
    return set;
  };
  ec.train.seed = seed;
  const TrainResult tr = train(model, make_set(split.thief), make_set(split.test), ec.train);
  const Evaluation eval = evaluate_surrogate(model, split.test, split.test.y_true, ec.target_fpr);
  model.threshold = eval.report.threshold;
  const fs::path out = prepare_out(cfg);
  save_model(model, out / "target.xtrw");
  spdlog::info("target model: best epoch {} threshold {:.6f} held-out accuracy {:.4f} tpr {:.4f} fpr {:.4f}",
               tr.best.epoch, model.threshold, eval.report.accuracy, eval.report.tpr, eval.report.fpr);
  return kOk;
}

int cmd_serve(const ExperimentConfig& cfg) {
  const DatasetMatrix reference = load_dataset(required_path(cfg, "data"));
  const TargetSpec spec = parse_target_spec(cfg.get("target"));
  if (spec.kind == "remote") throw ConfigError("serve-oracle cannot proxy a remote target");
  OracleServerConfig sc;
  sc.host = cfg.get("host");
  sc.port = static_cast<int>(cfg.get_int("port"));
  const std::int64_t delay = cfg.get_int("delay_ms");
  if (delay < 0) throw ConfigError("--delay-ms must be >= 0");
  sc.delay = std::chrono::milliseconds(delay);
  if (const std::uint64_t cap = cfg.get_u64("max_queries"); cap > 0) sc.max_queries = cap;
  OracleServer server(std::shared_ptr<TargetOracle>(make_target(spec, reference)), sc);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.start();
  while (g_stop == 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  spdlog::info("served {} queries", server.queries());
  return kOk;
}

std::vector<std::uint8_t> target_labels_for(const TargetSpec& spec, const DatasetMatrix& reference,
                                            const DatasetMatrix& rows) {
  auto oracle = make_target(spec, reference);
  auto labels = oracle->label(FeatureRows(rows));
  if (spec.kind == "remote") {
    spdlog::info("evaluation labels used {} remote queries outside the budget", oracle->query_count());
  }
  return labels;
}

int cmd_extract(const ExperimentConfig& cfg) {
  const std::vector<std::uint64_t> seeds = cfg.seed_list();
  const ExtractionConfig base = cfg.extraction(seeds.front());
  const BudgetPlan plan = plan_budget(base.budget, base.rounds);
  spdlog::info("plan: validation {} seed {} per-round {} final-round bonus {}", plan.validation_n, plan.seed_n,
               plan.per_round_n, plan.final_round_bonus);
  const DatasetMatrix thief = load_dataset(required_path(cfg, "thief"));
  const DatasetMatrix test = load_dataset(required_path(cfg, "test"));
  const TargetSpec spec = parse_target_spec(cfg.get("target"));
  const std::vector<std::uint8_t> test_labels = target_labels_for(spec, thief, test);

  const fs::path root = prepare_out(cfg);
  const bool multi = !cfg.get_int_list("seeds").empty();
  for (std::uint64_t seed : seeds) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.set("seed", std::to_string(seed));
    run_cfg.set("seeds", "");
    fs::path dir = root;
    if (multi) {
      dir = root / ("seed-" + std::to_string(seed));
      fs::create_directories(dir);
      run_cfg.set("out", dir.string());
    }
    run_cfg.save(dir / kConfigFile);
    auto oracle = make_target(spec, thief);
    const ExtractionResult r = run_extraction(thief, test, test_labels, *oracle, cfg.extraction(seed));
    write_rounds_csv(r.reports, dir / kRoundsFile);
    save_model(r.model, dir / "surrogate.xtrw");
    write_roc_csv(roc_curve(std::span<const double>(surrogate_scores(r.model, test).data(), test.n), test.y_true),
                  dir / "roc.csv");
    spdlog::info("seed {}: {} oracle queries (validation included), shortfall {}, final agreement {:.4f}", seed,
                 r.queries, r.shortfall, r.reports.back().agreement);
  }
  if (multi) {
    const auto rows = summarize(collect_runs(root));
    write_summary_csv(rows, root / "summary.csv");
  }
  return kOk;
}

int cmd_evaluate(const ExperimentConfig& cfg) {
  const SurrogateModel model = load_model(required_path(cfg, "model"));
  const DatasetMatrix test = load_dataset(required_path(cfg, "test"));
  const TargetSpec spec = parse_target_spec(cfg.get("target"));
  const DatasetMatrix reference = cfg.get("thief").empty() ? test : load_dataset(cfg.get("thief"));
  const std::vector<std::uint8_t> labels = target_labels_for(spec, reference, test);
  const Evaluation e = evaluate_surrogate(model, test, labels, cfg.get_real("fpr"));
  const fs::path out = prepare_out(cfg);
  std::vector<RoundReport> rows{e.report};
  write_rounds_csv(rows, out / "evaluation.csv");
  write_roc_csv(roc_curve(std::span<const double>(e.scores.data(), test.n), test.y_true), out / "roc.csv");
  spdlog::info("threshold {:.6f} agreement {:.4f} accuracy {:.4f} tpr {:.4f} fpr {:.4f} auc {:.4f}", e.report.threshold,
               e.report.agreement, e.report.accuracy, e.report.tpr, e.report.fpr, e.report.auc);
  return kOk;
}

std::vector<std::string> split_paths(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int cmd_evade(const ExperimentConfig& cfg) {
  const DatasetMatrix data = load_dataset(required_path(cfg, "data"));
  const TargetSpec spec = parse_target_spec(cfg.get("target"));
  auto target = make_target(spec, data);

  struct Named {
    std::string name;
    std::unique_ptr<TargetOracle> oracle;
  };
  std::vector<Named> models;
  models.push_back({"target", make_target(spec, data)});
  for (const auto& path : split_paths(cfg.get("surrogates"))) {
    SurrogateModel m = load_model(path);
    const double threshold = m.threshold;
    models.push_back({fs::path(path).stem().string(),
                      std::make_unique<NnTarget>(std::make_shared<SurrogateScorer>(std::move(m)), threshold)});
  }

  // Detected positives form the shared base set.
  const std::size_t wanted = static_cast<std::size_t>(cfg.get_u64("samples"));
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < data.n; ++i) {
    if (data.y_true[i] == 1) positives.push_back(i);
  }
  const std::vector<float> pos_rows = gather_rows(data, positives);
  const auto detected = target->label(FeatureRows(pos_rows.data(), positives.size(), data.d));
  std::vector<std::size_t> base_rows;
  for (std::size_t i = 0; i < positives.size() && base_rows.size() < wanted; ++i) {
    if (detected[i] == 1) base_rows.push_back(positives[i]);
  }
  if (base_rows.empty()) throw ConfigError("evade: the target detects none of the positive rows");
  const std::vector<float> base = gather_rows(data, base_rows);
  const FeatureRows base_view(base.data(), base_rows.size(), data.d);

  RandomCatalogConfig rc;
  rc.actions = static_cast<std::size_t>(cfg.get_u64("actions"));
  rc.nonzeros = static_cast<std::size_t>(cfg.get_u64("action_nonzeros"));
  rc.scale = cfg.get_real("action_scale");
  rc.seed = cfg.get_u64("seed");
  const ActionCatalog catalog = make_random_catalog(data.d, size_list(cfg, "monotone"), rc);

  const fs::path out = prepare_out(cfg);
  std::vector<NamedRows> stage1_sets;
  std::vector<NamedRows> minimized_sets;
  std::ofstream summary(out / "evasion.csv", std::ios::binary);
  summary << "generator,samples,successes,queries\n";
  for (auto& m : models) {
    const CampaignResult c = run_campaign(base_view, *m.oracle, catalog, cfg.evasion());
    summary << m.name << ',' << base_rows.size() << ',' << c.successes << ',' << c.queries << '\n';
    spdlog::info("generator {}: {}/{} evasive, {} queries", m.name, c.successes, base_rows.size(), c.queries);
    stage1_sets.push_back({m.name, current_rows(c.evasive)});
    minimized_sets.push_back({m.name, current_rows(c.minimized)});
  }
  std::vector<NamedOracle> targets;
  for (auto& m : models) targets.push_back({m.name, m.oracle.get()});
  write_transfer_csv(transfer_matrix(base_view, stage1_sets, targets), out / "transfer_stage1.csv");
  write_transfer_csv(transfer_matrix(base_view, minimized_sets, targets), out / "transfer.csv");
  return kOk;
}

int cmd_report(const ExperimentConfig& cfg) {
  const fs::path root = cfg.get("out");
  const auto runs = collect_runs(root);
  if (runs.empty()) throw ConfigError("report: no rounds.csv under " + root.string());
  const auto rows = summarize(runs);
  write_summary_csv(rows, root / "summary.csv");
  for (const auto& r : rows) {
    spdlog::info("{} / {}: {} runs, agreement {:.4f} +- {:.4f}, accuracy {:.4f} +- {:.4f}", r.strategy, r.arch, r.runs,
                 r.agreement.mean, r.agreement.std, r.accuracy.mean, r.accuracy.std);
  }
  return kOk;
}

void setup_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("extractkit");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
}

}  // namespace

int execute(const std::vector<std::string>& args) {
  setup_logging();
  CLI::App app("Active-learning model extraction and evasion toolkit", "extractkit");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  const std::vector<std::string> extract_keys =
      with({"budget", "rounds", "strategy", "fpr", "seed", "seeds", "pre_cap", "mc_passes", "timing", "target",
            "thief", "test", "out"},
           kTrainKeys);

  struct Entry {
    CLI::App* sub;
    std::unique_ptr<Options> opts;
    int (*run)(const ExperimentConfig&);
  };
  std::vector<Entry> entries;
  auto add = [&](const char* name, const char* help, std::vector<std::string> keys,
                 int (*run)(const ExperimentConfig&)) {
    CLI::App* sub = app.add_subcommand(name, help);
    entries.push_back({sub, std::make_unique<Options>(sub, std::move(keys)), run});
  };
  add("gen-data", "generate a synthetic dataset and its thief/test split",
      {"n", "dims", "balance", "clusters", "spread", "monotone", "timestamps", "thief_fraction", "seed", "out"},
      cmd_gen_data);
  add("train-target", "train an nn target model or fit a planted tree",
      with({"data", "kind", "depth", "pool", "rho", "fpr", "seed", "out"}, kTrainKeys), cmd_train_target);
  add("serve-oracle", "serve a target over HTTP",
      {"target", "data", "host", "port", "delay_ms", "max_queries"}, cmd_serve);
  add("extract", "run the active-learning extraction", extract_keys, cmd_extract);
  add("evaluate", "evaluate a surrogate against a target on a test set",
      {"model", "test", "thief", "target", "fpr", "out"}, cmd_evaluate);
  add("evade", "run two-stage evasion campaigns and the transfer matrix",
      {"data", "target", "surrogates", "monotone", "max_pulls", "actions", "action_nonzeros", "action_scale", "samples",
       "seed", "out"},
      cmd_evade);
  add("report", "aggregate rounds.csv files under --out into summary.csv", {"out"}, cmd_report);

  std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    for (auto& e : entries) {
      if (e.sub->parsed()) return e.run(e.opts->resolve());
    }
    return kConfigError;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  } catch (const BudgetError& e) {
    spdlog::error("budget violation: {}", e.what());
    return kBudgetError;
  } catch (const TransportError& e) {
    spdlog::error("transport error: {}", e.what());
    return kTransportError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
}

int execute(int argc, char** argv) { return execute(std::vector<std::string>(argv, argv + argc)); }

}  // namespace extractkit::cli
