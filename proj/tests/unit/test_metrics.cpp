#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/metrics_oracle.hpp"
#include "extractkit/errors.hpp"
#include "extractkit/metrics.hpp"
#include "extractkit/rng.hpp"
#include "helpers.hpp"

using namespace extractkit;

namespace {

struct Case {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

// Coarse scores so that ties are common; both classes present.
Case random_case(RngStream& rng, std::size_t n) {
  Case c;
  for (std::size_t i = 0; i < n; ++i) {
    c.scores.push_back(double(rng.below(15)) / 14.0);
    c.labels.push_back(std::uint8_t(rng.below(2)));
  }
  c.labels[0] = 0;
  c.labels[1] = 1;
  return c;
}

double concordance(const Case& c) { return testing::concordance(c.scores, c.labels); }

double scan_threshold(const Case& c, double target) { return testing::scan_threshold(c.scores, c.labels, target); }

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("confusion examples") {
  std::vector<double> s{0.9, 0.8, 0.3, 0.1};
  std::vector<std::uint8_t> y{1, 0, 1, 0};
  auto c = confusion_at_threshold(s, y, 0.5);
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.tn == 1);
  CHECK(c.fn == 1);
  CHECK(c.tpr == 0.5);
  CHECK(c.fpr == 0.5);
  CHECK(c.accuracy == 0.5);
  // ties go to the positive side
  CHECK(confusion_at_threshold(s, y, 0.8).fp == 1);
  std::vector<std::uint8_t> pos{1, 1, 1, 1};
  auto only = confusion_at_threshold(s, pos, 0.5);
  CHECK_FALSE(only.fpr_defined);
  CHECK(only.fpr == 0.0);
  CHECK_THROWS_AS(confusion_at_threshold(std::vector<double>{}, std::vector<std::uint8_t>{}, 0.5), ShapeError);
  CHECK_THROWS_AS(confusion_at_threshold(s, std::vector<std::uint8_t>{1, 0}, 0.5), ShapeError);
  CHECK_THROWS_AS(confusion_at_threshold(s, std::vector<std::uint8_t>{1, 0, 2, 0}, 0.5), ShapeError);
}

TEST_CASE("confusion matches a direct count") {
  RngStream rng(1);
  for (int t = 0; t < 100; ++t) {
    auto c = random_case(rng, 50);
    const double thr = double(rng.below(16)) / 14.0;
    auto m = confusion_at_threshold(c.scores, c.labels, thr);
    const auto [tp, fp, tn, fn] = testing::brute_confusion(c.scores, c.labels, thr);
    CHECK(m.tp == tp);
    CHECK(m.fp == fp);
    CHECK(m.tn == tn);
    CHECK(m.fn == fn);
    // accuracy decomposes over the classes
    const double pos = double(tp + fn), neg = double(fp + tn);
    CHECK(m.accuracy == doctest::Approx((pos * m.tpr + neg * (1.0 - m.fpr)) / 50.0));
  }
}

TEST_CASE("auc examples") {
  std::vector<std::uint8_t> y{0, 0, 1, 1};
  CHECK(roc_curve(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y).auc == 1.0);
  CHECK(roc_curve(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y).auc == 0.0);
  CHECK(roc_curve(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y).auc == 0.5);
  CHECK(roc_curve(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y).auc == 0.75);
  auto roc = roc_curve(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y);
  CHECK(roc.points.front().fpr == 0.0);
  CHECK(roc.points.front().tpr == 0.0);
  CHECK(roc.points.back().fpr == 1.0);
  CHECK(roc.points.back().tpr == 1.0);
  CHECK_THROWS_AS(roc_curve(std::vector<double>{0.1, 0.2}, std::vector<std::uint8_t>{1, 1}), ShapeError);
}

TEST_CASE("auc equals pairwise concordance") {
  RngStream rng(2);
  for (int t = 0; t < 100; ++t) {
    auto c = random_case(rng, 40);
    CHECK(roc_curve(c.scores, c.labels).auc == doctest::Approx(concordance(c)).epsilon(1e-12));
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  RngStream rng(3);
  for (int t = 0; t < 50; ++t) {
    auto c = random_case(rng, 60);
    Case d = c;
    for (auto& s : d.scores) s = std::exp(3.0 * s) - 7.0;
    CHECK(roc_curve(d.scores, d.labels).auc == doctest::Approx(roc_curve(c.scores, c.labels).auc));
  }
}

TEST_CASE("threshold for fpr matches a linear scan") {
  RngStream rng(4);
  for (int t = 0; t < 200; ++t) {
    auto c = random_case(rng, 30);
    const double target = double(rng.below(11)) / 20.0;
    const double thr = threshold_for_fpr(c.scores, c.labels, target);
    CHECK(thr == scan_threshold(c, target));
    auto m = confusion_at_threshold(c.scores, c.labels, thr);
    CHECK(m.fpr <= target);
    // No other candidate with FPR under the cap has higher TPR.
    for (double s : c.scores) {
      auto o = confusion_at_threshold(c.scores, c.labels, s);
      if (o.fpr <= target) CHECK(o.tpr <= m.tpr);
    }
  }
}

TEST_CASE("threshold for fpr examples") {
  std::vector<double> s{0.1, 0.2, 0.3, 0.9};
  std::vector<std::uint8_t> y{0, 0, 0, 1};
  CHECK(threshold_for_fpr(s, y, 0.0) == 0.9);
  CHECK(threshold_for_fpr(s, y, 1.0 / 3.0) == 0.3);
  CHECK(threshold_for_fpr(s, y, 1.0) == 0.1);
  std::vector<std::uint8_t> neg{0, 0, 0, 0};
  CHECK(threshold_for_fpr(s, neg, 0.0) > 1.0);
  CHECK_THROWS_AS(threshold_for_fpr(s, std::vector<std::uint8_t>{1, 1, 1, 1}, 0.1), ShapeError);
  CHECK_THROWS_AS(threshold_for_fpr(s, y, -0.1), ConfigError);
}

TEST_CASE("agreement and detection rate") {
  std::vector<std::uint8_t> a{1, 0, 1, 1}, b{1, 1, 1, 0};
  CHECK(agreement(a, b) == 0.5);
  CHECK(agreement(a, b) == agreement(b, a));
  CHECK(agreement(a, a) == 1.0);
  CHECK(detection_rate(a) == 0.75);
  CHECK_THROWS_AS(detection_rate(std::vector<std::uint8_t>{}), ShapeError);
  CHECK(labels_at_threshold(std::vector<double>{0.2, 0.5, 0.7}, 0.5) == std::vector<std::uint8_t>{0, 1, 1});
}

TEST_CASE("roc csv") {
  auto roc = roc_curve(std::vector<double>{0.1, 0.9}, std::vector<std::uint8_t>{0, 1});
  auto dir = testing::scratch_dir("roc");
  write_roc_csv(roc, dir / "roc.csv");
  const auto text = testing::slurp(dir / "roc.csv");
  CHECK(text.rfind("fpr,tpr,threshold\n0.000000,0.000000,", 0) == 0);
  CHECK(text.find("\n1.000000,1.000000,0.1\n") != std::string::npos);
}

}
