#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "extractkit/data.hpp"
#include "extractkit/oracles.hpp"

namespace extractkit {

// Target specs accepted by --target:
//   planted:depth=6,rho=0.05,seed=0   tree fitted to the reference data
//   planted:tree.json,rho=0.05,seed=0 tree loaded from JSON
//   nn:model.xtrw[,threshold=0.5]     surrogate file as a target (default: its stored threshold)
//   remote:http://host:port           scan service client
//   constant:0|1
struct TargetSpec {
  std::string kind;
  std::string path;  // tree / model file or endpoint
  std::size_t depth = 6;
  std::size_t pool = 0;  // split-feature pool, 0 for all dims
  double rho = 0.0;
  std::uint64_t seed = 0;
  bool has_threshold = false;
  double threshold = 0.5;
  int constant = 0;
};

TargetSpec parse_target_spec(std::string_view text);

// Builds the oracle. `reference` feeds planted trees and supplies the width
// for remote targets.
std::unique_ptr<TargetOracle> make_target(const TargetSpec& spec, const DatasetMatrix& reference);

}  // namespace extractkit
