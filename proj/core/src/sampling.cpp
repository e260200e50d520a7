#include "extractkit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "extractkit/errors.hpp"
#include "extractkit/kmedoids.hpp"

namespace extractkit {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::random: return "random";
    case Strategy::entropy: return "entropy";
    case Strategy::entropy_kmedoids: return "entropy-kmedoids";
    case Strategy::mcdropout_entropy: return "mcdropout-entropy";
  }
  return "random";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "random") return Strategy::random;
  if (name == "entropy") return Strategy::entropy;
  if (name == "entropy-kmedoids") return Strategy::entropy_kmedoids;
  if (name == "mcdropout-entropy") return Strategy::mcdropout_entropy;
  throw ConfigError("unknown strategy \"" + std::string(name) +
                    "\" (expected random|entropy|entropy-kmedoids|mcdropout-entropy)");
}

double shannon_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("shannon_entropy: p outside [0,1]");
  // Evaluate on the smaller side so H(p) and H(1-p) are bit-identical.
  const double q = std::min(p, 1.0 - p);
  const double r = 1.0 - q;
  double h = 0.0;
  if (q > 0.0) h -= q * std::log(q);
  if (r > 0.0) h -= r * std::log(r);
  return h;
}

QuerySelection select_random(std::span<const std::size_t> pool, std::size_t n, RngStream& rng) {
  if (n > pool.size()) throw ConfigError("select_random: n exceeds pool size");
  QuerySelection sel{{}, std::string(to_string(Strategy::random)), 0};
  for (std::size_t pos : sample_without_replacement(pool.size(), n, rng)) sel.indices.push_back(pool[pos]);
  return sel;
}

namespace {

// Positions into `predictions` ordered by descending entropy, then ascending thief index.
std::vector<std::size_t> entropy_ranking(const PredictionBatch& predictions, std::size_t top) {
  if (predictions.indices.size() != predictions.scores.size()) {
    throw ShapeError("prediction batch: index/score length mismatch");
  }
  std::vector<double> h(predictions.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!std::isfinite(predictions.scores[i])) throw KernelError("prediction batch: non-finite score", i);
    h[i] = shannon_entropy(predictions.scores[i]);
  }
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    if (h[a] != h[b]) return h[a] > h[b];
    return predictions.indices[a] < predictions.indices[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(), before);
  order.resize(top);
  return order;
}

}  // namespace

QuerySelection select_entropy(const PredictionBatch& predictions, std::size_t n) {
  if (n > predictions.size()) throw ConfigError("select_entropy: n exceeds batch size");
  QuerySelection sel{{}, std::string(to_string(Strategy::entropy)), 0};
  for (std::size_t pos : entropy_ranking(predictions, n)) sel.indices.push_back(predictions.indices[pos]);
  return sel;
}

QuerySelection select_entropy_kmedoids(const PredictionBatch& predictions, const Matrix& features,
                                       std::size_t n, std::size_t pre_cap, RngStream& rng) {
  QuerySelection sel{{}, std::string(to_string(Strategy::entropy_kmedoids)), 0};
  if (predictions.size() <= n) {
    sel.indices = predictions.indices;
    return sel;
  }
  const std::size_t shortlist_size = std::min(pre_cap, predictions.size());
  if (n > shortlist_size) throw ConfigError("select_entropy_kmedoids: n exceeds pre-selection size");
  if (n == 0) return sel;
  const std::vector<std::size_t> shortlist = entropy_ranking(predictions, shortlist_size);

  Matrix points(static_cast<Eigen::Index>(shortlist.size()), features.cols());
  for (std::size_t i = 0; i < shortlist.size(); ++i) {
    const std::size_t row = predictions.indices[shortlist[i]];
    if (row >= static_cast<std::size_t>(features.rows())) throw ShapeError("select_entropy_kmedoids: index out of range");
    points.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(row));
  }
  const KMedoidsResult km = kmedoids(points, n, rng);
  for (std::size_t m : km.medoids) sel.indices.push_back(predictions.indices[shortlist[m]]);
  return sel;
}

QuerySelection select_mcdropout_entropy(const SurrogateModel& model, const Matrix& features,
                                        const Vector* true_labels, std::span<const std::size_t> pool,
                                        std::size_t n, std::size_t passes, std::uint64_t seed) {
  if (static_cast<std::size_t>(features.rows()) != pool.size()) {
    throw ShapeError("select_mcdropout_entropy: feature rows must align with the pool");
  }
  if (n > pool.size()) throw ConfigError("select_mcdropout_entropy: n exceeds pool size");
  const Vector mean = mc_dropout_predict(model, features, true_labels, passes, seed);
  PredictionBatch batch{{pool.begin(), pool.end()}, {mean.data(), mean.data() + mean.size()}};
  QuerySelection sel = select_entropy(batch, n);
  sel.strategy = std::string(to_string(Strategy::mcdropout_entropy));
  return sel;
}

}  // namespace extractkit
