#include <doctest.h>

#include <filesystem>

#include "cli.hpp"
#include "extractkit/config.hpp"
#include "extractkit/data.hpp"
#include "extractkit/oracle_service.hpp"
#include "extractkit/planted.hpp"
#include "helpers.hpp"

using namespace extractkit;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "extractkit");
  return cli::execute(args);
}

// gen-data + planted target shared by the CLI cases.
fs::path prepared() {
  static fs::path dir;
  if (!dir.empty()) return dir;
  dir = testing::scratch_dir("cli");
  REQUIRE(run({"gen-data", "--n", "600", "--dims", "6", "--seed", "3", "--out", (dir / "data").string()}) == 0);
  REQUIRE(run({"train-target", "--kind", "planted", "--data", (dir / "data" / "thief.xdsm").string(), "--depth", "3",
               "--rho", "0.1", "--seed", "2", "--out", (dir / "target").string()}) == 0);
  return dir;
}

std::vector<std::string> small_extract(const fs::path& dir, const std::string& out) {
  return {"extract",     "--thief",  (dir / "data" / "thief.xdsm").string(),
          "--test",      (dir / "data" / "test.xdsm").string(),
          "--target",    "planted:" + (dir / "target" / "target.json").string() + ",rho=0.1,seed=2",
          "--budget",    "120",      "--rounds", "2",  "--hidden", "8,4", "--epochs", "4", "--patience", "2",
          "--batch",     "32",       "--out",    (dir / out).string()};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("argument and config errors exit with 2") {
  CHECK(run({}) == cli::kConfigError);
  CHECK(run({"extract", "--budget", "3", "--rounds", "4"}) == cli::kConfigError);
  CHECK(run({"extract", "--no-such-flag", "1"}) == cli::kConfigError);
  CHECK(run({"extract", "--strategy", "kcenter"}) == cli::kConfigError);
  CHECK(run({"gen-data", "--thief-fraction", "1.5", "--out", testing::scratch_dir("cli-bad").string()}) ==
        cli::kConfigError);
  auto dir = testing::scratch_dir("cli-cfg");
  std::ofstream(dir / "bad.txt") << "budget = 100\nnot_a_key = 1\n";
  CHECK(run({"extract", "--config", (dir / "bad.txt").string()}) == cli::kConfigError);
}

TEST_CASE("gen-data and train-target write their artifacts") {
  auto dir = prepared();
  CHECK(fs::exists(dir / "data" / "dataset.xdsm"));
  auto thief = load_dataset(dir / "data" / "thief.xdsm");
  auto test = load_dataset(dir / "data" / "test.xdsm");
  CHECK(thief.n == 450);
  CHECK(test.n == 150);
  auto tree = load_planted_tree(dir / "target" / "target.json");
  CHECK(tree.leaf_count() == 8);
}

TEST_CASE("extract writes rounds, config and model; flags override the config file") {
  auto dir = prepared();
  std::ofstream(dir / "exp.txt") << "budget = 5000\nstrategy = random\narch = fcnn\n";
  auto args = small_extract(dir, "run");
  args.push_back("--config");
  args.push_back((dir / "exp.txt").string());
  REQUIRE(run(args) == 0);
  auto rounds = read_rounds_csv(dir / "run" / "rounds.csv");
  REQUIRE(rounds.size() == 3);
  CHECK(rounds.back().queries == 120);
  auto cfg = ExperimentConfig::load(dir / "run" / "config.txt");
  CHECK(cfg.get_u64("budget") == 120);
  CHECK(cfg.get("strategy") == "random");
  CHECK(cfg.get("arch") == "fcnn");
  CHECK(fs::exists(dir / "run" / "surrogate.xtrw"));
  CHECK(fs::exists(dir / "run" / "roc.csv"));

  CHECK(run({"evaluate", "--model", (dir / "run" / "surrogate.xtrw").string(), "--test",
             (dir / "data" / "test.xdsm").string(), "--thief", (dir / "data" / "thief.xdsm").string(), "--target",
             "planted:" + (dir / "target" / "target.json").string() + ",rho=0.1,seed=2", "--out",
             (dir / "eval").string()}) == 0);
  CHECK(read_rounds_csv(dir / "eval" / "evaluation.csv").size() == 1);
}

TEST_CASE("multi-seed extraction and report") {
  auto dir = prepared();
  auto args = small_extract(dir, "multi");
  args.insert(args.end(), {"--seeds", "1,2", "--strategy", "entropy"});
  REQUIRE(run(args) == 0);
  CHECK(fs::exists(dir / "multi" / "seed-1" / "rounds.csv"));
  CHECK(fs::exists(dir / "multi" / "seed-2" / "config.txt"));
  const auto summary = testing::slurp(dir / "multi" / "summary.csv");
  CHECK(summary.find("\nentropy,dualfcnn,2,120.0,") != std::string::npos);
  fs::remove(dir / "multi" / "summary.csv");
  CHECK(run({"report", "--out", (dir / "multi").string()}) == 0);
  CHECK(testing::slurp(dir / "multi" / "summary.csv") == summary);
  CHECK(run({"report", "--out", (dir / "nothing-here").string()}) == cli::kConfigError);
}

TEST_CASE("remote targets: refusal exits 3, unreachable exits 4") {
  auto dir = prepared();
  auto thief = load_dataset(dir / "data" / "thief.xdsm");
  auto tree = load_planted_tree(dir / "target" / "target.json");
  OracleServerConfig sc;
  sc.max_queries = 150 + 60;  // test labels fit, the extraction budget does not
  OracleServer server(std::make_shared<PlantedOracle>(PlantedTarget(tree, 0.1, 2)), sc);
  server.start();
  auto args = small_extract(dir, "remote");
  args[6] = "remote:" + server.endpoint();
  CHECK(run(args) == cli::kBudgetError);

  int port = 0;
  {
    OracleServer probe(std::make_shared<ConstantOracle>(6, 1), {});
    probe.start();
    port = probe.port();
  }
  args[6] = "remote:127.0.0.1:" + std::to_string(port);
  CHECK(run(args) == cli::kTransportError);
}

TEST_CASE("evade writes the transfer matrix") {
  auto dir = prepared();
  auto ex = small_extract(dir, "sur");
  REQUIRE(run(ex) == 0);
  REQUIRE(run({"evade", "--data", (dir / "data" / "test.xdsm").string(), "--target",
               "planted:" + (dir / "target" / "target.json").string() + ",rho=0.1,seed=2", "--surrogates",
               (dir / "sur" / "surrogate.xtrw").string(), "--samples", "20", "--max-pulls", "10", "--out",
               (dir / "evade").string()}) == 0);
  const auto text = testing::slurp(dir / "evade" / "transfer.csv");
  CHECK(text.rfind("generator,target,surrogate\nbaseline,1.0000,", 0) == 0);
  CHECK(text.find("\ntarget,") != std::string::npos);
  CHECK(text.find("\nsurrogate,") != std::string::npos);
  CHECK(fs::exists(dir / "evade" / "evasion.csv"));
}

}
