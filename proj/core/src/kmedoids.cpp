#include "extractkit/kmedoids.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "extractkit/errors.hpp"

namespace extractkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Distances from every point to point `m`.
Vector distances_to(const Matrix& points, std::size_t m) {
  return (points.rowwise() - points.row(static_cast<Eigen::Index>(m))).rowwise().norm();
}

struct Assignment {
  std::vector<std::size_t> owner;
  std::vector<double> distance;
  double cost = 0.0;
};

Assignment assign(const Matrix& points, const std::vector<std::size_t>& medoids) {
  const auto n = static_cast<std::size_t>(points.rows());
  Assignment a{std::vector<std::size_t>(n, 0), std::vector<double>(n, kInf), 0.0};
  for (std::size_t c = 0; c < medoids.size(); ++c) {
    const Vector d = distances_to(points, medoids[c]);
    for (std::size_t i = 0; i < n; ++i) {
      if (d[static_cast<Eigen::Index>(i)] < a.distance[i]) {
        a.distance[i] = d[static_cast<Eigen::Index>(i)];
        a.owner[i] = c;
      }
    }
  }
  for (double d : a.distance) a.cost += d;
  return a;
}

std::vector<std::size_t> seed_medoids(const Matrix& points, std::size_t k, RngStream& rng) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<std::size_t> medoids;
  medoids.reserve(k);
  std::vector<char> chosen(n, 0);
  medoids.push_back(static_cast<std::size_t>(rng.below(n)));
  chosen[medoids.back()] = 1;
  Vector nearest = distances_to(points, medoids.back());

  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  while (medoids.size() < k) {
    const double total = nearest.sum();
    std::size_t best = n;
    double best_cost = kInf;
    Vector best_nearest;
    if (total <= 0.0) {
      // Every remaining point coincides with a medoid: pick any unchosen one.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      best = free[static_cast<std::size_t>(rng.below(free.size()))];
      best_nearest = nearest.cwiseMin(distances_to(points, best));
    } else {
      for (std::size_t t = 0; t < trials; ++t) {
        // D-weighted draw among points not yet chosen.
        double target = rng.uniform() * total;
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (chosen[i]) continue;
          pick = i;
          target -= nearest[static_cast<Eigen::Index>(i)];
          if (target < 0.0 && nearest[static_cast<Eigen::Index>(i)] > 0.0) break;
        }
        if (pick == n) continue;
        Vector candidate = nearest.cwiseMin(distances_to(points, pick));
        const double cost = candidate.sum();
        if (cost < best_cost) {
          best_cost = cost;
          best = pick;
          best_nearest = std::move(candidate);
        }
      }
    }
    medoids.push_back(best);
    chosen[best] = 1;
    nearest = std::move(best_nearest);
  }
  return medoids;
}

// PAM swap phase on a full distance matrix; accepts the best improving swap
// per sweep until none improves.
void swap_polish(const Matrix& points, std::vector<std::size_t>& medoids, double& cost) {
  const auto n = static_cast<std::size_t>(points.rows());
  Matrix dist(points.rows(), points.rows());
  for (std::size_t i = 0; i < n; ++i) dist.col(static_cast<Eigen::Index>(i)) = distances_to(points, i);

  auto cost_of = [&](const std::vector<std::size_t>& set) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = kInf;
      for (std::size_t m : set) best = std::min(best, dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)));
      total += best;
    }
    return total;
  };

  for (;;) {
    double best_cost = cost;
    std::size_t best_slot = medoids.size();
    std::size_t best_point = n;
    std::vector<std::size_t> trial = medoids;
    for (std::size_t slot = 0; slot < medoids.size(); ++slot) {
      for (std::size_t h = 0; h < n; ++h) {
        if (std::find(medoids.begin(), medoids.end(), h) != medoids.end()) continue;
        trial[slot] = h;
        const double c = cost_of(trial);
        // Relative margin keeps floating-point noise from cycling.
        if (c < best_cost - 1e-12 * std::max(1.0, best_cost)) {
          best_cost = c;
          best_slot = slot;
          best_point = h;
        }
      }
      trial[slot] = medoids[slot];
    }
    if (best_slot == medoids.size()) return;
    medoids[best_slot] = best_point;
    cost = best_cost;
  }
}

}  // namespace

double kmedoids_cost(const Matrix& points, const std::vector<std::size_t>& medoids) {
  return assign(points, medoids).cost;
}

KMedoidsResult kmedoids(const Matrix& points, std::size_t k, RngStream& rng, const KMedoidsOptions& options) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0) throw ConfigError("kmedoids: k must be positive");
  if (k > n) throw ConfigError("kmedoids: k exceeds the number of points");

  KMedoidsResult result;
  if (k == n) {
    result.medoids.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.medoids[i] = i;
  } else {
    result.medoids = seed_medoids(points, k, rng);
  }
  Assignment a = assign(points, result.medoids);
  result.cost_history.push_back(a.cost);

  for (std::size_t iter = 0; iter < options.max_iterations && k < n; ++iter) {
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[a.owner[i]].push_back(i);

    bool changed = false;
    for (std::size_t c = 0; c < k; ++c) {
      const auto& group = members[c];
      if (group.empty()) continue;
      Matrix sub(static_cast<Eigen::Index>(group.size()), points.cols());
      for (std::size_t g = 0; g < group.size(); ++g) {
        sub.row(static_cast<Eigen::Index>(g)) = points.row(static_cast<Eigen::Index>(group[g]));
      }
      const std::size_t current = result.medoids[c];
      std::size_t best = current;
      double best_sum = kInf;
      for (std::size_t g = 0; g < group.size(); ++g) {
        const double s = distances_to(sub, g).sum();
        if (s < best_sum || (s == best_sum && group[g] == current)) {
          best_sum = s;
          best = group[g];
        }
      }
      // The current medoid can sit outside its own group when it coincides
      // with another medoid, so compare against its actual in-group sum.
      const double current_sum =
          (sub.rowwise() - points.row(static_cast<Eigen::Index>(current))).rowwise().norm().sum();
      if (best != current && best_sum < current_sum) {
        result.medoids[c] = best;
        changed = true;
      }
    }
    result.iterations = iter + 1;
    if (!changed) break;
    a = assign(points, result.medoids);
    result.cost_history.push_back(a.cost);
  }

  if (k < n && n <= options.swap_polish_max_points) {
    double cost = a.cost;
    swap_polish(points, result.medoids, cost);
    a = assign(points, result.medoids);
    if (a.cost < result.cost_history.back()) result.cost_history.push_back(a.cost);
  }
  result.assignment = a.owner;
  result.cost = a.cost;
  return result;
}

}  // namespace extractkit
