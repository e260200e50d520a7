#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "extractkit/numkit.hpp"

namespace extractkit {

// Full binary axis-aligned decision tree. Internal nodes send x to the left
// child iff x[feature] <= threshold.
class PlantedTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::uint8_t label = 0;       // leaves only
    std::size_t leaf_index = 0;   // leaves only, 0..leaf_count()-1
  };

  PlantedTree() = default;
  PlantedTree(std::size_t dims, std::size_t depth, std::vector<Node> nodes);

  std::size_t dims() const noexcept { return dims_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  // Node index of each leaf, ordered by leaf_index.
  const std::vector<std::size_t>& leaves() const noexcept { return leaves_; }

  std::size_t leaf_of(std::span<const float> x) const;
  std::uint8_t label(std::span<const float> x) const;

 private:
  std::size_t dims_ = 0;
  std::size_t depth_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::size_t> leaves_;
};

// Rows used to place split thresholds (random inner quantiles of the rows
// reaching each node) and leaf labels (majority true label).
struct PlantedReference {
  const Matrix* features = nullptr;
  const std::vector<std::uint8_t>* labels = nullptr;
};

struct PlantedTreeConfig {
  std::size_t dims = 0;
  std::size_t depth = 1;
  std::uint64_t seed = 0;
  // Without reference data thresholds are drawn uniformly inside the node's
  // cell of the box [box_lo, box_hi]^dims.
  double box_lo = -1.0;
  double box_hi = 1.0;
  // Split features are drawn from a seeded subset of this many dims; 0 uses all.
  std::size_t feature_pool = 0;
};

PlantedTree make_planted_tree(const PlantedTreeConfig& config, PlantedReference reference = {});

// Ground-truth tree with ceil(rate * leaves) leaf labels flipped.
class PlantedTarget {
 public:
  PlantedTarget(PlantedTree tree, double disagreement_rate, std::uint64_t seed);

  const PlantedTree& ground_truth() const noexcept { return tree_; }
  double disagreement_rate() const noexcept { return rate_; }
  const std::vector<std::uint8_t>& flipped() const noexcept { return flipped_; }  // per leaf
  std::size_t flipped_count() const noexcept;

  std::uint8_t label(std::span<const float> x) const;

 private:
  PlantedTree tree_;
  double rate_;
  std::vector<std::uint8_t> flipped_;
};

struct PlantedPair {
  PlantedTarget target;
  PlantedTree ground_truth;
};

PlantedPair make_planted_target(std::size_t dims, std::size_t depth, double disagreement_rate,
                                std::uint64_t seed, PlantedReference reference = {});

std::string planted_tree_to_json(const PlantedTree& tree);
PlantedTree planted_tree_from_json(const std::string& text);
void save_planted_tree(const PlantedTree& tree, const std::filesystem::path& path);
PlantedTree load_planted_tree(const std::filesystem::path& path);

}  // namespace extractkit
