#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace testing {

struct BruteConfusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline BruteConfusion brute_confusion(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                                      double threshold) {
  BruteConfusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool p = scores[i] >= threshold;
    if (labels[i]) (p ? c.tp : c.fn)++;
    else (p ? c.fp : c.tn)++;
  }
  return c;
}

inline double brute_agreement(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return double(same) / double(a.size());
}

// P(score_pos > score_neg) + 0.5 P(tie) over all positive/negative pairs.
inline double concordance(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  double num = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) num += 1.0;
      else if (scores[i] == scores[j]) num += 0.5;
    }
  }
  return num / pairs;
}

// Smallest candidate (every score, plus one value above max(1, max score))
// whose FPR is within target, found by a linear scan with direct counting.
inline double scan_threshold(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                             double target) {
  std::vector<double> cand = scores;
  cand.push_back(std::nextafter(std::max(1.0, *std::max_element(cand.begin(), cand.end())),
                                std::numeric_limits<double>::infinity()));
  std::sort(cand.begin(), cand.end());
  for (double t : cand) {
    auto c = brute_confusion(scores, labels, t);
    if (double(c.fp) / double(c.fp + c.tn) <= target) return t;
  }
  return cand.back();
}

}  // namespace testing
