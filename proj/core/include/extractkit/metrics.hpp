#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace extractkit {

// Prediction rule everywhere: positive iff score >= threshold.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double tpr = 0.0;
  double fpr = 0.0;
  double accuracy = 0.0;
  // False when the class needed for the rate is absent; the rate is then 0.
  bool tpr_defined = true;
  bool fpr_defined = true;
};

Confusion confusion_at_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels,
                                 double threshold);

struct RocPoint {
  double fpr;
  double tpr;
  double threshold;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1)
  double auc = 0.0;
};

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Smallest candidate threshold (distinct scores plus one value above every
// score) whose FPR does not exceed target_fpr. Maximizes TPR under the cap.
double threshold_for_fpr(std::span<const double> scores, std::span<const std::uint8_t> labels,
                         double target_fpr);

double agreement(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

// Fraction of a positive-only set labeled 1.
double detection_rate(std::span<const std::uint8_t> labels);

std::vector<std::uint8_t> labels_at_threshold(std::span<const double> scores, double threshold);

void write_roc_csv(const RocCurve& roc, const std::filesystem::path& path);

}  // namespace extractkit
