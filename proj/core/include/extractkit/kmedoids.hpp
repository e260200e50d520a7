#pragma once

#include <cstddef>
#include <vector>

#include "extractkit/numkit.hpp"
#include "extractkit/rng.hpp"

namespace extractkit {

struct KMedoidsOptions {
  std::size_t max_iterations = 100;
  // Instances with at most this many points get a PAM-style swap pass after
  // the alternating phase, so small problems end at a swap-local optimum.
  std::size_t swap_polish_max_points = 256;
};

struct KMedoidsResult {
  std::vector<std::size_t> medoids;     // row indices into the input
  std::vector<std::size_t> assignment;  // position in `medoids` for each point
  double cost = 0.0;                    // sum of Euclidean distances to assigned medoid
  std::vector<double> cost_history;     // one entry per completed step, non-increasing
  std::size_t iterations = 0;
};

// Alternating (Voronoi-iteration) k-medoids with greedy k-means++ seeding.
KMedoidsResult kmedoids(const Matrix& points, std::size_t k, RngStream& rng,
                        const KMedoidsOptions& options = {});

// Sum over points of the distance to the nearest of `medoids`.
double kmedoids_cost(const Matrix& points, const std::vector<std::size_t>& medoids);

}  // namespace extractkit
