#include "extractkit/targets.hpp"

#include <charconv>

#include "extractkit/errors.hpp"
#include "extractkit/planted.hpp"

namespace extractkit {

namespace {

template <typename T>
T number(std::string_view key, std::string_view text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("target spec: bad value for " + std::string(key) + ": \"" + std::string(text) + "\"");
  }
  return v;
}

}  // namespace

TargetSpec parse_target_spec(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("target spec \"" + std::string(text) + "\" needs a kind prefix (planted:, nn:, remote:, constant:)");
  }
  TargetSpec spec;
  spec.kind = std::string(text.substr(0, colon));
  const std::string_view rest = text.substr(colon + 1);
  if (spec.kind == "remote") {
    if (rest.empty()) throw ConfigError("target spec: remote endpoint missing");
    spec.path = std::string(rest);
    return spec;
  }
  if (spec.kind == "constant") {
    if (rest != "0" && rest != "1") throw ConfigError("target spec: constant must be 0 or 1");
    spec.constant = rest == "1" ? 1 : 0;
    return spec;
  }
  if (spec.kind != "planted" && spec.kind != "nn") {
    throw ConfigError("target spec: unknown kind \"" + spec.kind + "\"");
  }
  std::size_t start = 0;
  bool first = true;
  while (start <= rest.size()) {
    const auto comma = rest.find(',', start);
    const std::string_view item =
        rest.substr(start, comma == std::string_view::npos ? rest.size() - start : comma - start);
    start = comma == std::string_view::npos ? rest.size() + 1 : comma + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      if (!first) throw ConfigError("target spec: unexpected item \"" + std::string(item) + "\"");
      spec.path = std::string(item);
    } else {
      const std::string_view key = item.substr(0, eq);
      const std::string_view value = item.substr(eq + 1);
      if (key == "depth" && spec.kind == "planted") {
        spec.depth = number<std::size_t>(key, value);
      } else if (key == "pool" && spec.kind == "planted") {
        spec.pool = number<std::size_t>(key, value);
      } else if (key == "rho" && spec.kind == "planted") {
        spec.rho = number<double>(key, value);
      } else if (key == "seed" && spec.kind == "planted") {
        spec.seed = number<std::uint64_t>(key, value);
      } else if (key == "threshold" && spec.kind == "nn") {
        spec.threshold = number<double>(key, value);
        spec.has_threshold = true;
      } else {
        throw ConfigError("target spec: unknown option \"" + std::string(key) + "\" for " + spec.kind);
      }
    }
    first = false;
  }
  if (spec.kind == "nn" && spec.path.empty()) throw ConfigError("target spec: nn needs a model path");
  return spec;
}

std::unique_ptr<TargetOracle> make_target(const TargetSpec& spec, const DatasetMatrix& reference) {
  if (spec.kind == "constant") {
    return std::make_unique<ConstantOracle>(reference.d, static_cast<std::uint8_t>(spec.constant));
  }
  if (spec.kind == "remote") return std::make_unique<RemoteOracle>(spec.path, reference.d);
  if (spec.kind == "nn") {
    SurrogateModel model = load_model(spec.path);
    if (model.arch.input_dim != reference.d) throw ShapeError("nn target: model width differs from the data");
    const double threshold = spec.has_threshold ? spec.threshold : model.threshold;
    return std::make_unique<NnTarget>(std::make_shared<SurrogateScorer>(std::move(model)), threshold);
  }
  PlantedTree tree;
  if (!spec.path.empty()) {
    tree = load_planted_tree(spec.path);
    if (tree.dims() != reference.d) throw ShapeError("planted target: tree width differs from the data");
  } else {
    const Matrix x = reference.to_matrix();
    PlantedTreeConfig cfg;
    cfg.dims = reference.d;
    cfg.depth = spec.depth;
    cfg.seed = spec.seed;
    cfg.feature_pool = spec.pool;
    tree = make_planted_tree(cfg, PlantedReference{&x, &reference.y_true});
  }
  return std::make_unique<PlantedOracle>(PlantedTarget(std::move(tree), spec.rho, spec.seed));
}

}  // namespace extractkit
