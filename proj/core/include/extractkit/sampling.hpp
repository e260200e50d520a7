#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "extractkit/numkit.hpp"
#include "extractkit/rng.hpp"
#include "extractkit/surrogate.hpp"

namespace extractkit {

enum class Strategy { random, entropy, entropy_kmedoids, mcdropout_entropy };

std::string_view to_string(Strategy s) noexcept;
Strategy parse_strategy(std::string_view name);

// Surrogate scores for the currently unlabeled thief samples.
struct PredictionBatch {
  std::vector<std::size_t> indices;  // thief-dataset row indices, unique
  std::vector<double> scores;

  std::size_t size() const noexcept { return indices.size(); }
};

struct QuerySelection {
  std::vector<std::size_t> indices;
  std::string strategy;
  std::size_t round = 0;
};

inline constexpr std::size_t kDefaultPreCap = 10000;
inline constexpr std::size_t kDefaultMcPasses = 20;

// Binary Shannon entropy in nats; 0·ln 0 = 0.
double shannon_entropy(double p);

QuerySelection select_random(std::span<const std::size_t> pool, std::size_t n, RngStream& rng);

// Top-n by entropy, ties broken by ascending thief index.
QuerySelection select_entropy(const PredictionBatch& predictions, std::size_t n);

// Entropy pre-selection of at most `pre_cap` candidates, then k-medoids with
// k = n on their features; returns the medoids. `features` is indexed by thief
// row (the indices in `predictions`).
QuerySelection select_entropy_kmedoids(const PredictionBatch& predictions, const Matrix& features,
                                       std::size_t n, std::size_t pre_cap, RngStream& rng);

// Entropy over MC-dropout averaged scores. `features` and `true_labels` are the
// scaled rows of `pool` in order.
QuerySelection select_mcdropout_entropy(const SurrogateModel& model, const Matrix& features,
                                        const Vector* true_labels, std::span<const std::size_t> pool,
                                        std::size_t n, std::size_t passes, std::uint64_t seed);

}  // namespace extractkit
