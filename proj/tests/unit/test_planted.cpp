#include <doctest.h>

#include <cmath>
#include <set>

#include "extractkit/errors.hpp"
#include "extractkit/planted.hpp"
#include "extractkit/rng.hpp"
#include "helpers.hpp"

using namespace extractkit;

namespace {

// Volume of every leaf cell as a fraction of the box, by recursion over bounds.
void leaf_volumes(const PlantedTree& t, std::size_t node, std::vector<double> lo, std::vector<double> hi,
                  double box_lo, double box_hi, std::vector<double>& out) {
  const auto& n = t.nodes()[node];
  if (n.feature < 0) {
    double v = 1.0;
    for (std::size_t j = 0; j < lo.size(); ++j) v *= std::max(0.0, hi[j] - lo[j]) / (box_hi - box_lo);
    out[n.leaf_index] = v;
    return;
  }
  const auto f = static_cast<std::size_t>(n.feature);
  auto lhi = hi;
  lhi[f] = std::min(hi[f], n.threshold);
  leaf_volumes(t, n.left, lo, lhi, box_lo, box_hi, out);
  auto rlo = lo;
  rlo[f] = std::max(lo[f], n.threshold);
  leaf_volumes(t, n.right, rlo, hi, box_lo, box_hi, out);
}

// Independent walk that returns the label, written against the node list only.
std::uint8_t walk(const PlantedTree& t, std::span<const float> x) {
  std::size_t i = 0;
  for (;;) {
    const auto& n = t.nodes()[i];
    if (n.feature < 0) return n.label;
    i = double(x[std::size_t(n.feature)]) <= n.threshold ? n.left : n.right;
  }
}

}  // namespace

TEST_SUITE("planted") {

TEST_CASE("rate zero matches the ground truth everywhere") {
  auto pair = make_planted_target(5, 4, 0.0, 3);
  CHECK(pair.target.flipped_count() == 0);
  RngStream rng(1);
  std::vector<float> x(5);
  for (int i = 0; i < 2000; ++i) {
    for (auto& v : x) v = float(rng.uniform(-1.2, 1.2));
    CHECK(pair.target.label(x) == pair.ground_truth.label(x));
  }
}

TEST_CASE("depth 1 has exactly one split") {
  PlantedTreeConfig cfg;
  cfg.dims = 3;
  cfg.depth = 1;
  cfg.seed = 2;
  auto t = make_planted_tree(cfg);
  CHECK(t.nodes().size() == 3);
  CHECK(t.leaf_count() == 2);
  CHECK(t.nodes()[0].feature >= 0);
}

TEST_CASE("a full tree of depth k has 2^k leaves") {
  for (std::size_t k = 1; k <= 8; ++k) {
    PlantedTreeConfig cfg;
    cfg.dims = 4;
    cfg.depth = k;
    cfg.seed = k;
    auto t = make_planted_tree(cfg);
    CHECK(t.leaf_count() == (std::size_t{1} << k));
    CHECK(t.nodes().size() == (std::size_t{2} << k) - 1);
  }
}

TEST_CASE("ceil(rate * leaves) leaves are flipped") {
  for (double rho : {0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 0.99}) {
    auto pair = make_planted_target(6, 6, rho, 7);
    const auto expect = static_cast<std::size_t>(std::ceil(rho * 64.0 - 1e-9));
    CHECK(pair.target.flipped_count() == expect);
  }
  CHECK(make_planted_target(6, 6, 0.05, 1).target.flipped_count() == 4);
  CHECK(make_planted_target(6, 6, 0.10, 1).target.flipped_count() == 7);
  CHECK_THROWS_AS(make_planted_target(6, 6, 1.0, 1), ConfigError);
  CHECK_THROWS_AS(make_planted_target(6, 6, -0.1, 1), ConfigError);
}

TEST_CASE("disagreement equals the flipped leaf volume") {
  auto pair = make_planted_target(3, 5, 0.25, 13);
  const auto& t = pair.ground_truth;
  std::vector<double> vol(t.leaf_count(), 0.0);
  leaf_volumes(t, 0, std::vector<double>(3, -1.0), std::vector<double>(3, 1.0), -1.0, 1.0, vol);
  double total = 0.0, flipped = 0.0;
  for (std::size_t l = 0; l < vol.size(); ++l) {
    total += vol[l];
    if (pair.target.flipped()[l]) flipped += vol[l];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  RngStream rng(99);
  const int n = 200000;
  int differ = 0;
  std::vector<float> x(3);
  for (int i = 0; i < n; ++i) {
    for (auto& v : x) v = float(rng.uniform(-1.0, 1.0));
    differ += pair.target.label(x) != pair.ground_truth.label(x);
  }
  const double se = std::sqrt(flipped * (1 - flipped) / n);
  CHECK(std::abs(differ / double(n) - flipped) < 4 * se + 1e-4);
}

TEST_CASE("labels agree with an independent tree walk") {
  Matrix ref = testing::random_matrix(500, 4, 5);
  std::vector<std::uint8_t> labels(500);
  for (std::size_t i = 0; i < 500; ++i) labels[i] = ref(Eigen::Index(i), 0) + ref(Eigen::Index(i), 1) > 0;
  PlantedTreeConfig cfg;
  cfg.dims = 4;
  cfg.depth = 4;
  cfg.seed = 8;
  auto t = make_planted_tree(cfg, PlantedReference{&ref, &labels});
  std::vector<float> x(4);
  for (std::size_t i = 0; i < 500; ++i) {
    for (int j = 0; j < 4; ++j) x[std::size_t(j)] = float(ref(Eigen::Index(i), j));
    CHECK(t.label(x) == walk(t, x));
  }
  CHECK_THROWS_AS(t.label(std::vector<float>(3)), ShapeError);
}

TEST_CASE("reference leaves take the majority label") {
  Matrix ref(6, 1);
  ref << -3, -2, -1, 1, 2, 3;
  std::vector<std::uint8_t> labels{0, 0, 0, 1, 1, 1};
  PlantedTreeConfig cfg;
  cfg.dims = 1;
  cfg.depth = 1;
  auto t = make_planted_tree(cfg, PlantedReference{&ref, &labels});
  const double thr = t.nodes()[0].threshold;
  std::vector<float> lo{-5.0f}, hi{5.0f};
  // The split lands inside the middle half of the data, so each side is pure
  // or dominated by its own class.
  CHECK(thr >= -2.0);
  CHECK(thr <= 2.0);
  CHECK(t.label(lo) == 0);
  CHECK(t.label(hi) == 1);
}

TEST_CASE("feature pool bounds the split features") {
  PlantedTreeConfig cfg;
  cfg.dims = 64;
  cfg.depth = 6;
  cfg.seed = 11;
  cfg.feature_pool = 4;
  auto t = make_planted_tree(cfg);
  std::set<int> used;
  for (const auto& n : t.nodes())
    if (n.feature >= 0) used.insert(n.feature);
  CHECK(used.size() <= 4);
  cfg.feature_pool = 65;
  CHECK_THROWS_AS(make_planted_tree(cfg), ConfigError);
  cfg.feature_pool = 0;
  cfg.dims = 0;
  CHECK_THROWS_AS(make_planted_tree(cfg), ConfigError);
}

TEST_CASE("deterministic in the seed") {
  auto a = make_planted_target(8, 5, 0.1, 21);
  auto b = make_planted_target(8, 5, 0.1, 21);
  CHECK(planted_tree_to_json(a.ground_truth) == planted_tree_to_json(b.ground_truth));
  CHECK(a.target.flipped() == b.target.flipped());
}

TEST_CASE("json round trip") {
  auto pair = make_planted_target(5, 4, 0.0, 3);
  const auto text = planted_tree_to_json(pair.ground_truth);
  auto back = planted_tree_from_json(text);
  CHECK(planted_tree_to_json(back) == text);
  auto dir = testing::scratch_dir("planted");
  save_planted_tree(pair.ground_truth, dir / "tree.json");
  CHECK(planted_tree_to_json(load_planted_tree(dir / "tree.json")) == text);
  CHECK_THROWS_AS(planted_tree_from_json("{\"dims\":2}"), FormatError);
  CHECK_THROWS_AS(planted_tree_from_json("not json"), FormatError);
  CHECK_THROWS_AS(
      planted_tree_from_json(R"({"dims":2,"depth":1,"nodes":[{"feature":5,"threshold":0,"left":1,"right":2},)"
                             R"({"leaf":0,"label":0},{"leaf":1,"label":1}]})"),
      FormatError);
}

}
