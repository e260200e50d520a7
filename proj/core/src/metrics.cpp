#include "extractkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "extractkit/errors.hpp"

namespace extractkit {

namespace {

void check_pair(std::size_t a, std::size_t b, const char* what) {
  if (a == 0) throw ShapeError(std::string(what) + ": empty set");
  if (a != b) throw ShapeError(std::string(what) + ": length mismatch");
}

void check_labels(std::span<const std::uint8_t> labels, const char* what) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw ShapeError(std::string(what) + ": non-binary label at " + std::to_string(i));
  }
}

}  // namespace

Confusion confusion_at_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                 double threshold) {
  check_pair(scores.size(), labels.size(), "confusion_at_threshold");
  check_labels(labels, "confusion_at_threshold");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) {
      predicted ? ++c.tp : ++c.fn;
    } else {
      predicted ? ++c.fp : ++c.tn;
    }
  }
  const std::size_t positives = c.tp + c.fn;
  const std::size_t negatives = c.fp + c.tn;
  c.tpr_defined = positives > 0;
  c.fpr_defined = negatives > 0;
  c.tpr = c.tpr_defined ? static_cast<double>(c.tp) / static_cast<double>(positives) : 0.0;
  c.fpr = c.fpr_defined ? static_cast<double>(c.fp) / static_cast<double>(negatives) : 0.0;
  c.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(scores.size());
  return c;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_pair(scores.size(), labels.size(), "roc_curve");
  check_labels(labels, "roc_curve");
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  const double negatives = static_cast<double>(labels.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) throw ShapeError("roc_curve: both classes are required");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  const double top = *std::max_element(scores.begin(), scores.end());
  roc.points.push_back({0.0, 0.0, std::nextafter(top, std::numeric_limits<double>::infinity())});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      labels[order[i]] ? ++tp : ++fp;
      ++i;
    }
    const RocPoint next{static_cast<double>(fp) / negatives, static_cast<double>(tp) / positives, s};
    const RocPoint& prev = roc.points.back();
    roc.auc += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) * 0.5;
    roc.points.push_back(next);
  }
  return roc;
}

double threshold_for_fpr(std::span<const double> scores, std::span<const std::uint8_t> labels,
                         double target_fpr) {
  check_pair(scores.size(), labels.size(), "threshold_for_fpr");
  check_labels(labels, "threshold_for_fpr");
  if (target_fpr < 0.0) throw ConfigError("threshold_for_fpr: target FPR must be non-negative");

  std::vector<double> negative_scores;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) negative_scores.push_back(scores[i]);
  }
  if (negative_scores.empty()) throw ShapeError("threshold_for_fpr: no negatives present");
  std::sort(negative_scores.begin(), negative_scores.end());

  std::vector<double> candidates(scores.begin(), scores.end());
  const double top = *std::max_element(candidates.begin(), candidates.end());
  candidates.push_back(std::nextafter(std::max(top, 1.0), std::numeric_limits<double>::infinity()));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  // FPR is non-increasing in the threshold: binary search the first feasible candidate.
  const auto negatives = static_cast<double>(negative_scores.size());
  auto fpr_at = [&](double tau) {
    const auto below = std::lower_bound(negative_scores.begin(), negative_scores.end(), tau);
    return static_cast<double>(negative_scores.end() - below) / negatives;
  };
  std::size_t lo = 0;
  std::size_t hi = candidates.size() - 1;  // always feasible (FPR 0)
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (fpr_at(candidates[mid]) <= target_fpr) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return candidates[lo];
}

double agreement(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  check_pair(a.size(), b.size(), "agreement");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += (a[i] == b[i]) ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

double detection_rate(std::span<const std::uint8_t> labels) {
  if (labels.empty()) throw ShapeError("detection_rate: empty set");
  const auto detected = std::count(labels.begin(), labels.end(), std::uint8_t{1});
  return static_cast<double>(detected) / static_cast<double>(labels.size());
}

std::vector<std::uint8_t> labels_at_threshold(std::span<const double> scores, double threshold) {
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold ? 1 : 0;
  return out;
}

void write_roc_csv(const RocCurve& roc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "fpr,tpr,threshold\n";
  char line[128];
  for (const auto& p : roc.points) {
    std::snprintf(line, sizeof line, "%.6f,%.6f,%.9g\n", p.fpr, p.tpr, p.threshold);
    out << line;
  }
}

}  // namespace extractkit
