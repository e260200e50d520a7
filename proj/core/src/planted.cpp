#include "extractkit/planted.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "extractkit/errors.hpp"
#include "extractkit/rng.hpp"

namespace extractkit {

PlantedTree::PlantedTree(std::size_t dims, std::size_t depth, std::vector<Node> nodes)
    : dims_(dims), depth_(depth), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw FormatError("planted tree: no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& node = nodes_[i];
    if (node.feature < 0) {
      leaves_.push_back(i);
      continue;
    }
    if (static_cast<std::size_t>(node.feature) >= dims_ || node.left >= nodes_.size() ||
        node.right >= nodes_.size() || node.left <= i || node.right <= i) {
      throw FormatError("planted tree: malformed node " + std::to_string(i));
    }
  }
  std::sort(leaves_.begin(), leaves_.end(),
            [&](std::size_t a, std::size_t b) { return nodes_[a].leaf_index < nodes_[b].leaf_index; });
  for (std::size_t k = 0; k < leaves_.size(); ++k) {
    if (nodes_[leaves_[k]].leaf_index != k) throw FormatError("planted tree: leaf indices not dense");
  }
}

std::size_t PlantedTree::leaf_of(std::span<const float> x) const {
  if (x.size() != dims_) throw ShapeError("planted tree: dimension mismatch");
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const Node& node = nodes_[i];
    i = static_cast<double>(x[static_cast<std::size_t>(node.feature)]) <= node.threshold ? node.left : node.right;
  }
  return nodes_[i].leaf_index;
}

std::uint8_t PlantedTree::label(std::span<const float> x) const { return nodes_[leaves_[leaf_of(x)]].label; }

namespace {

struct Builder {
  const PlantedTreeConfig& config;
  PlantedReference reference;
  RngStream rng;
  std::vector<std::size_t> features;
  std::vector<PlantedTree::Node> nodes;
  std::size_t next_leaf = 0;

  std::size_t build(std::size_t level, const std::vector<std::size_t>& rows, std::vector<double>& lo,
                    std::vector<double>& hi) {
    const std::size_t id = nodes.size();
    nodes.emplace_back();
    if (level == config.depth) {
      PlantedTree::Node& leaf = nodes[id];
      leaf.leaf_index = next_leaf++;
      std::size_t positives = 0;
      if (reference.labels != nullptr) {
        for (std::size_t r : rows) positives += (*reference.labels)[r];
      }
      const std::size_t negatives = rows.size() - positives;
      if (positives != negatives) {
        leaf.label = positives > negatives ? 1 : 0;
      } else {
        leaf.label = rng.bernoulli(0.5) ? 1 : 0;
      }
      return id;
    }
    const std::size_t feature = features[static_cast<std::size_t>(rng.below(features.size()))];
    double threshold;
    if (reference.features != nullptr && rows.size() >= 2) {
      std::vector<double> values;
      values.reserve(rows.size());
      for (std::size_t r : rows) {
        values.push_back((*reference.features)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(feature)));
      }
      threshold = quantile(std::move(values), rng.uniform(0.25, 0.75));
    } else if (reference.features != nullptr) {
      threshold = rows.empty() ? 0.0
                               : (*reference.features)(static_cast<Eigen::Index>(rows.front()),
                                                       static_cast<Eigen::Index>(feature));
    } else {
      threshold = rng.uniform(lo[feature], hi[feature]);
    }

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) {
      const double v = (*reference.features)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(feature));
      (v <= threshold ? left_rows : right_rows).push_back(r);
    }

    const double saved_hi = hi[feature];
    hi[feature] = std::min(hi[feature], threshold);
    const std::size_t left = build(level + 1, left_rows, lo, hi);
    hi[feature] = saved_hi;
    const double saved_lo = lo[feature];
    lo[feature] = std::max(lo[feature], threshold);
    const std::size_t right = build(level + 1, right_rows, lo, hi);
    lo[feature] = saved_lo;

    PlantedTree::Node& node = nodes[id];
    node.feature = static_cast<int>(feature);
    node.threshold = threshold;
    node.left = left;
    node.right = right;
    return id;
  }
};

}  // namespace

PlantedTree make_planted_tree(const PlantedTreeConfig& config, PlantedReference reference) {
  if (config.dims == 0) throw ConfigError("planted tree: dims must be >= 1");
  if (config.depth == 0 || config.depth > 20) throw ConfigError("planted tree: depth must be in [1,20]");
  if (!(config.box_lo < config.box_hi)) throw ConfigError("planted tree: empty box");
  std::vector<std::size_t> rows;
  if (reference.features != nullptr) {
    if (static_cast<std::size_t>(reference.features->cols()) != config.dims) {
      throw ShapeError("planted tree: reference width mismatch");
    }
    if (reference.labels != nullptr &&
        reference.labels->size() != static_cast<std::size_t>(reference.features->rows())) {
      throw ShapeError("planted tree: reference label count mismatch");
    }
    rows.resize(static_cast<std::size_t>(reference.features->rows()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  } else {
    reference.labels = nullptr;
  }
  if (config.feature_pool > config.dims) throw ConfigError("planted tree: feature pool larger than dims");
  Builder b{config, reference, RngStream(config.seed), {}, {}, 0};
  if (config.feature_pool == 0) {
    for (std::size_t f = 0; f < config.dims; ++f) b.features.push_back(f);
  } else {
    RngStream pool_rng = b.rng.derive(0x706f6f6cULL);
    b.features = sample_without_replacement(config.dims, config.feature_pool, pool_rng);
  }
  std::vector<double> lo(config.dims, config.box_lo);
  std::vector<double> hi(config.dims, config.box_hi);
  b.build(0, rows, lo, hi);
  return PlantedTree(config.dims, config.depth, std::move(b.nodes));
}

PlantedTarget::PlantedTarget(PlantedTree tree, double disagreement_rate, std::uint64_t seed)
    : tree_(std::move(tree)), rate_(disagreement_rate), flipped_(tree_.leaf_count(), 0) {
  if (!(disagreement_rate >= 0.0 && disagreement_rate < 1.0)) {
    throw ConfigError("planted target: disagreement rate must be in [0,1)");
  }
  const auto leaves = tree_.leaf_count();
  const auto count = static_cast<std::size_t>(std::ceil(disagreement_rate * static_cast<double>(leaves) - 1e-9));
  RngStream rng = RngStream(seed).derive(0x666c6970ULL);
  for (std::size_t leaf : sample_without_replacement(leaves, std::min(count, leaves), rng)) flipped_[leaf] = 1;
}

std::size_t PlantedTarget::flipped_count() const noexcept {
  return static_cast<std::size_t>(std::count(flipped_.begin(), flipped_.end(), std::uint8_t{1}));
}

std::uint8_t PlantedTarget::label(std::span<const float> x) const {
  const std::size_t leaf = tree_.leaf_of(x);
  return tree_.nodes()[tree_.leaves()[leaf]].label ^ flipped_[leaf];
}

PlantedPair make_planted_target(std::size_t dims, std::size_t depth, double disagreement_rate,
                                std::uint64_t seed, PlantedReference reference) {
  PlantedTreeConfig cfg;
  cfg.dims = dims;
  cfg.depth = depth;
  cfg.seed = seed;
  PlantedTree tree = make_planted_tree(cfg, reference);
  return PlantedPair{PlantedTarget(tree, disagreement_rate, seed), tree};
}

std::string planted_tree_to_json(const PlantedTree& tree) {
  nlohmann::json j;
  j["dims"] = tree.dims();
  j["depth"] = tree.depth();
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    if (n.feature < 0) {
      nodes.push_back({{"leaf", n.leaf_index}, {"label", n.label}});
    } else {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
  }
  return j.dump(1);
}

PlantedTree planted_tree_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::vector<PlantedTree::Node> nodes;
    for (const auto& item : j.at("nodes")) {
      PlantedTree::Node n;
      if (item.contains("leaf")) {
        n.leaf_index = item.at("leaf").get<std::size_t>();
        n.label = item.at("label").get<std::uint8_t>();
        if (n.label > 1) throw FormatError("planted tree json: non-binary leaf label");
      } else {
        n.feature = item.at("feature").get<int>();
        n.threshold = item.at("threshold").get<double>();
        n.left = item.at("left").get<std::size_t>();
        n.right = item.at("right").get<std::size_t>();
      }
      nodes.push_back(n);
    }
    return PlantedTree(j.at("dims").get<std::size_t>(), j.at("depth").get<std::size_t>(), std::move(nodes));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("planted tree json: ") + e.what());
  }
}

void save_planted_tree(const PlantedTree& tree, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << planted_tree_to_json(tree) << '\n';
}

PlantedTree load_planted_tree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return planted_tree_from_json(ss.str());
}

}  // namespace extractkit
