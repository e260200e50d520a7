#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "extractkit/errors.hpp"
#include "extractkit/numkit.hpp"
#include "helpers.hpp"

using namespace extractkit;
using Eigen::Index;

TEST_SUITE("numkit") {

TEST_CASE("elu and sigmoid") {
  CHECK(elu(2.0) == 2.0);
  CHECK(elu(0.0) == 0.0);
  CHECK(elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0));
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) <= 1.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
}

TEST_CASE("require_finite names the offending index") {
  Matrix m = Matrix::Zero(2, 3);
  CHECK_NOTHROW(require_finite(m, "m"));
  m(1, 2) = std::numeric_limits<double>::quiet_NaN();
  try {
    require_finite(m, "m");
    FAIL("expected KernelError");
  } catch (const KernelError& e) {
    CHECK(e.index() == 5);
  }
  std::vector<double> v{1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(require_finite(v, "v"), KernelError);
}

TEST_CASE("layer_norm") {
  Vector ones = Vector::Ones(2), zeros = Vector::Zero(2);
  Vector x(2);
  x << 1.0, -1.0;
  Vector y = layer_norm(x, ones, zeros, 1e-12);
  CHECK(y(0) == doctest::Approx(1.0));
  CHECK(y(1) == doctest::Approx(-1.0));

  Vector x3(3);
  x3 << 0.0, 2.0, 4.0;
  Vector g = Vector::Constant(3, 2.0), o = Vector::Constant(3, 1.0);
  Vector y3 = layer_norm(x3, g, o);
  const double denom = std::sqrt(8.0 / 3.0 + kLayerNormEps);
  for (int i = 0; i < 3; ++i) CHECK(y3(i) == doctest::Approx((x3(i) - 2.0) / denom * 2.0 + 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(layer_norm(x3, ones, zeros), ShapeError);
}

TEST_CASE("dense matches a naive multiply") {
  Matrix w = Matrix::Identity(3, 3);
  Vector x(3), b = Vector::Zero(3);
  x << 1, 2, 3;
  CHECK((dense(x, w, b) - x).norm() == 0.0);
  Vector c = Vector::Constant(3, 4.5);
  CHECK((dense(x, Matrix::Zero(3, 3), c) - c).norm() == 0.0);

  Matrix w32 = testing::random_matrix(3, 2, 1);
  Vector x2 = testing::random_matrix(2, 1, 2).col(0);
  Vector b3 = testing::random_matrix(3, 1, 3).col(0);
  Vector got = dense(x2, w32, b3);
  for (int i = 0; i < 3; ++i) {
    double acc = b3(i);
    for (int j = 0; j < 2; ++j) acc += w32(i, j) * x2(j);
    CHECK(got(i) == doctest::Approx(acc).epsilon(1e-14));
  }
  CHECK_THROWS_AS(dense(x, w32, b3), ShapeError);
}

TEST_CASE("dropout") {
  RngStream rng(1);
  Vector x = testing::random_matrix(100, 1, 4).col(0);
  auto r0 = dropout(x, 0.0, rng, true);
  CHECK((r0.output - x).norm() == 0.0);
  auto eval = dropout(x, 0.7, rng, false);
  CHECK((eval.output - x).norm() == 0.0);
  CHECK(std::all_of(eval.mask.begin(), eval.mask.end(), [](auto m) { return m == 1; }));
  CHECK_THROWS_AS(dropout(x, 1.0, rng, true), ConfigError);

  const Index n = 100000;
  Vector big = Vector::Ones(n);
  auto r = dropout(big, 0.3, rng, true);
  double kept = 0;
  for (auto m : r.mask) kept += m;
  CHECK(std::abs(kept / n - 0.7) < 0.01);
  CHECK(std::abs(r.output.mean() - 1.0) < 0.02);
  for (Index i = 0; i < n; ++i) {
    REQUIRE(r.output(i) == doctest::Approx(r.mask[i] ? 1.0 / 0.7 : 0.0));
  }
}

TEST_CASE("dropout masks are seed-deterministic") {
  Vector x = Vector::Ones(64);
  RngStream a(99), b(99);
  CHECK(dropout(x, 0.5, a, true).mask == dropout(x, 0.5, b, true).mask);
}

TEST_CASE("bce_loss") {
  std::vector<double> p{1.0 - 1e-7}, y{1.0};
  CHECK(bce_loss(p, y) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(bce_loss(std::vector<double>{0.5}, std::vector<double>{1.0}) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(bce_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{0.0, 1.0}) == doctest::Approx(std::log(2.0)));
  // Clamping keeps log(0) finite.
  CHECK(bce_loss(std::vector<double>{0.0}, std::vector<double>{1.0}) == doctest::Approx(-std::log(1e-7)));
  CHECK_THROWS_AS(bce_loss(std::vector<double>{}, std::vector<double>{}), ShapeError);
  RngStream rng(2);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> s{rng.uniform(), rng.uniform()}, l{double(rng.below(2)), double(rng.below(2))};
    CHECK(bce_loss(s, l) >= 0.0);
  }
}

TEST_CASE("adam: zero gradient only advances the step") {
  ParamSet p;
  p.blocks.push_back(testing::random_matrix(2, 2, 5));
  const Matrix before = p.blocks[0];
  AdamState st = AdamState::for_params(p);
  adam_step(p, p.zeros_like(), st);
  CHECK(st.step == 1);
  CHECK(p.version == 1);
  CHECK((p.blocks[0] - before).norm() == 0.0);
  CHECK(st.first_moment.squared_norm() == 0.0);
  CHECK(st.second_moment.squared_norm() == 0.0);
}

TEST_CASE("adam: first step moves by lr against the gradient sign") {
  for (double g : {3.0, -0.02, 1e-3}) {
    ParamSet p;
    p.blocks.push_back(Matrix::Constant(1, 1, 0.5));
    ParamSet grad;
    grad.blocks.push_back(Matrix::Constant(1, 1, g));
    AdamState st = AdamState::for_params(p);
    adam_step(p, grad, st);
    CHECK(p.blocks[0](0, 0) - 0.5 == doctest::Approx(-1e-3 * (g > 0 ? 1 : -1)).epsilon(1e-4));
  }
}

TEST_CASE("adam: two steps match a scalar reference") {
  // Hand-rolled bias-corrected Adam on one scalar.
  double theta = 1.0, m = 0.0, v = 0.0;
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double grads[2] = {0.4, -1.3};
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * grads[t - 1];
    v = b2 * v + (1 - b2) * grads[t - 1] * grads[t - 1];
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
  }
  ParamSet p;
  p.blocks.push_back(Matrix::Constant(1, 1, 1.0));
  AdamState st = AdamState::for_params(p, AdamConfig{lr, b1, b2, eps});
  for (double g : grads) {
    ParamSet grad;
    grad.blocks.push_back(Matrix::Constant(1, 1, g));
    adam_step(p, grad, st);
  }
  CHECK(p.blocks[0](0, 0) == doctest::Approx(theta).epsilon(1e-14));
  CHECK(st.step == 2);

  ParamSet wrong;
  wrong.blocks.push_back(Matrix::Zero(2, 1));
  CHECK_THROWS_AS(adam_step(p, wrong, st), ShapeError);
}

// Sort-and-interpolate quantile, independent of the library's.
static double oracle_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

TEST_CASE("quantile matches the oracle") {
  RngStream rng(12);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(1 + rng.below(30));
    for (auto& x : v) x = rng.normal();
    for (double q : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) CHECK(quantile(v, q) == doctest::Approx(oracle_quantile(v, q)));
  }
}

TEST_CASE("robust scaler") {
  Matrix x(5, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5, 100, 5;
  auto p = fit_robust_scaler(x);
  std::vector<double> col{1, 2, 3, 4, 100};
  CHECK(p.center(0) == doctest::Approx(oracle_quantile(col, 0.5)));
  CHECK(p.center(0) == 3.0);
  CHECK(p.scale(0) == doctest::Approx(oracle_quantile(col, 0.75) - oracle_quantile(col, 0.25)));
  CHECK(p.scale(0) == 2.0);
  CHECK(p.scale(1) == 1.0);
  Matrix s = apply_robust_scaler(p, x);
  CHECK(s.col(1).norm() == 0.0);
  CHECK((invert_robust_scaler(p, s) - x).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(fit_robust_scaler(Matrix(0, 3)), ShapeError);
}

TEST_CASE("robust scaler round trip and idempotence on random data") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Matrix x = testing::random_matrix(41, 6, seed, 3.0);
    auto p = fit_robust_scaler(x);
    Matrix s = apply_robust_scaler(p, x);
    CHECK((invert_robust_scaler(p, s) - x).cwiseAbs().maxCoeff() < 1e-9);
    auto again = fit_robust_scaler(s);
    CHECK(again.center.cwiseAbs().maxCoeff() < 1e-9);
    CHECK((again.scale.array() - 1.0).abs().maxCoeff() < 1e-9);
    for (Index j = 0; j < p.scale.size(); ++j) CHECK(p.scale(j) >= 0.0);
  }
}

TEST_CASE("ParamSet helpers") {
  ParamSet p;
  p.blocks.push_back(Matrix::Ones(2, 3));
  p.blocks.push_back(Matrix::Ones(1, 1));
  CHECK(p.count() == 7);
  CHECK(p.squared_norm() == 7.0);
  CHECK(p.same_shape(p.zeros_like()));
  CHECK(p.all_finite());
  p.blocks[1](0, 0) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(p.all_finite());
}

}
