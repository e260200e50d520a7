#include "extractkit/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "extractkit/errors.hpp"

#ifndef EXTRACTKIT_VERSION
#define EXTRACTKIT_VERSION "0.0.0"
#endif

namespace extractkit {

std::string_view version() noexcept { return EXTRACTKIT_VERSION; }

const std::vector<KeySpec>& ExperimentConfig::keys() {
  static const std::vector<KeySpec> k = {
      {"budget", KeyType::integer, "2000", "total oracle queries Q"},
      {"rounds", KeyType::integer, "4", "query rounds R"},
      {"strategy", KeyType::text, "entropy", "random|entropy|entropy-kmedoids|mcdropout-entropy"},
      {"arch", KeyType::text, "dualfcnn", "fcnn|dualfcnn"},
      {"hidden", KeyType::int_list, "512,256,128,64", "hidden layer widths"},
      {"dropout", KeyType::real, "0.3", "dropout rate"},
      {"epochs", KeyType::integer, "100", "max training epochs"},
      {"patience", KeyType::integer, "30", "early-stopping patience"},
      {"batch", KeyType::integer, "256", "minibatch size"},
      {"lr", KeyType::real, "0.001", "Adam learning rate"},
      {"fpr", KeyType::real, "0.01", "calibration false-positive rate"},
      {"seed", KeyType::integer, "0", "seed for single runs"},
      {"seeds", KeyType::int_list, "", "seed list for multi-seed runs"},
      {"pre_cap", KeyType::integer, "10000", "entropy pre-selection size for k-medoids"},
      {"mc_passes", KeyType::integer, "20", "MC-dropout passes"},
      {"timing", KeyType::boolean, "false", "record wall-clock seconds in rounds.csv"},
      {"target", KeyType::text, "planted:depth=6,rho=0.05,seed=0", "planted:...|nn:path|remote:url|constant:b"},
      {"thief", KeyType::text, "", "thief dataset path"},
      {"test", KeyType::text, "", "test dataset path"},
      {"data", KeyType::text, "", "dataset path (train-target, evade)"},
      {"out", KeyType::text, "out", "output directory"},
      {"n", KeyType::integer, "10000", "gen-data: sample count"},
      {"dims", KeyType::integer, "64", "gen-data: feature count"},
      {"balance", KeyType::real, "0.5", "gen-data: fraction of positives"},
      {"clusters", KeyType::integer, "3", "gen-data: clusters per class"},
      {"spread", KeyType::real, "1", "gen-data: cluster standard deviation"},
      {"monotone", KeyType::int_list, "", "gen-data/evade: monotone feature indices"},
      {"timestamps", KeyType::boolean, "false", "gen-data: emit timestamps"},
      {"thief_fraction", KeyType::real, "0.75", "gen-data: thief share of the split"},
      {"kind", KeyType::text, "nn", "train-target: nn|planted"},
      {"depth", KeyType::integer, "6", "train-target: planted tree depth"},
      {"pool", KeyType::integer, "0", "train-target: planted split-feature pool, 0 for all dims"},
      {"rho", KeyType::real, "0.05", "train-target: planted disagreement rate"},
      {"model", KeyType::text, "", "evaluate: surrogate model path"},
      {"surrogates", KeyType::text, "", "evade: comma-separated surrogate model paths"},
      {"max_pulls", KeyType::integer, "60", "evade: pulls per sample"},
      {"actions", KeyType::integer, "10", "evade: catalog size"},
      {"action_nonzeros", KeyType::integer, "4", "evade: features touched per action"},
      {"action_scale", KeyType::real, "0.5", "evade: action magnitude"},
      {"samples", KeyType::integer, "200", "evade: detected base samples to attack"},
      {"host", KeyType::text, "127.0.0.1", "serve-oracle: bind address"},
      {"port", KeyType::integer, "8080", "serve-oracle: port"},
      {"delay_ms", KeyType::integer, "0", "serve-oracle: per-request delay"},
      {"max_queries", KeyType::integer, "0", "serve-oracle: query cap, 0 for none"},
  };
  return k;
}

const KeySpec& ExperimentConfig::spec(std::string_view key) {
  for (const auto& s : keys()) {
    if (s.name == key) return s;
  }
  throw ConfigError("unknown config key \"" + std::string(key) + "\"");
}

ExperimentConfig::ExperimentConfig() {
  for (const auto& s : keys()) values_.emplace(std::string(s.name), std::string(s.default_value));
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(trim(text.substr(start, comma == std::string_view::npos ? text.size() - start : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void check_value(const KeySpec& spec, std::string_view value) {
  auto bad = [&] {
    return ConfigError("config key \"" + std::string(spec.name) + "\": invalid value \"" + std::string(value) + "\"");
  };
  switch (spec.type) {
    case KeyType::integer: {
      std::int64_t v;
      if (!parse_number(value, v)) throw bad();
      break;
    }
    case KeyType::real: {
      double v;
      if (!parse_number(value, v)) throw bad();
      break;
    }
    case KeyType::boolean:
      if (value != "true" && value != "false") throw bad();
      break;
    case KeyType::text:
      break;
    case KeyType::int_list:
      for (const auto& item : split_list(value)) {
        std::int64_t v;
        if (!parse_number(std::string_view(item), v)) throw bad();
      }
      break;
    case KeyType::real_list:
      for (const auto& item : split_list(value)) {
        double v;
        if (!parse_number(std::string_view(item), v)) throw bad();
      }
      break;
  }
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const KeySpec& s = spec(key);
  const std::string v = trim(value);
  check_value(s, v);
  values_[std::string(key)] = v;
}

void ExperimentConfig::merge(std::string_view text, std::string_view origin) {
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
    ++lineno;
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": expected `key = value`");
    }
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, std::string_view origin) {
  ExperimentConfig c;
  c.merge(text, origin);
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const std::string& ExperimentConfig::get(std::string_view key) const {
  spec(key);
  return values_.find(key)->second;
}

std::int64_t ExperimentConfig::get_int(std::string_view key) const {
  std::int64_t v = 0;
  parse_number(std::string_view(get(key)), v);
  return v;
}

std::uint64_t ExperimentConfig::get_u64(std::string_view key) const {
  const std::int64_t v = get_int(key);
  if (v < 0) throw ConfigError("config key \"" + std::string(key) + "\" must be >= 0");
  return static_cast<std::uint64_t>(v);
}

double ExperimentConfig::get_real(std::string_view key) const {
  double v = 0;
  parse_number(std::string_view(get(key)), v);
  return v;
}

bool ExperimentConfig::get_bool(std::string_view key) const { return get(key) == "true"; }

std::vector<std::int64_t> ExperimentConfig::get_int_list(std::string_view key) const {
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(get(key))) {
    std::int64_t v = 0;
    parse_number(std::string_view(item), v);
    out.push_back(v);
  }
  return out;
}

std::vector<double> ExperimentConfig::get_real_list(std::string_view key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) {
    double v = 0;
    parse_number(std::string_view(item), v);
    out.push_back(v);
  }
  return out;
}

std::vector<std::uint64_t> ExperimentConfig::seed_list() const {
  std::vector<std::uint64_t> out;
  for (std::int64_t s : get_int_list("seeds")) {
    if (s < 0) throw ConfigError("seeds must be >= 0");
    out.push_back(static_cast<std::uint64_t>(s));
  }
  if (out.empty()) out.push_back(get_u64("seed"));
  return out;
}

ExtractionConfig ExperimentConfig::extraction(std::uint64_t seed) const {
  ExtractionConfig c;
  c.budget = get_u64("budget");
  c.rounds = static_cast<std::size_t>(get_u64("rounds"));
  c.strategy = parse_strategy(get("strategy"));
  c.arch.kind = parse_arch(get("arch"));
  c.arch.hidden_sizes.clear();
  for (std::int64_t h : get_int_list("hidden")) {
    if (h <= 0) throw ConfigError("hidden widths must be >= 1");
    c.arch.hidden_sizes.push_back(static_cast<std::size_t>(h));
  }
  c.arch.dropout_rate = get_real("dropout");
  c.train.max_epochs = static_cast<std::size_t>(get_u64("epochs"));
  c.train.patience = static_cast<std::size_t>(get_u64("patience"));
  c.train.batch_size = static_cast<std::size_t>(get_u64("batch"));
  c.train.learning_rate = get_real("lr");
  c.target_fpr = get_real("fpr");
  c.pre_cap = static_cast<std::size_t>(get_u64("pre_cap"));
  c.mc_passes = static_cast<std::size_t>(get_u64("mc_passes"));
  c.record_time = get_bool("timing");
  c.seed = seed;
  c.train.validate();
  c.arch.input_dim = 1;
  c.arch.shape().validate();
  c.arch.input_dim = 0;
  return c;
}

EvasionConfig ExperimentConfig::evasion() const {
  EvasionConfig c;
  c.max_pulls = static_cast<std::size_t>(get_u64("max_pulls"));
  c.seed = get_u64("seed");
  return c;
}

std::string ExperimentConfig::to_text() const {
  std::string out = "# extractkit " + std::string(version()) + " resolved config\n";
  for (const auto& s : keys()) {
    out += std::string(s.name) + " = " + values_.find(s.name)->second + "\n";
  }
  return out;
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_text();
}

}  // namespace extractkit
