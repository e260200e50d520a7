#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "extractkit/extraction.hpp"

namespace extractkit {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

// One finished extraction run: a directory holding rounds.csv and config.txt.
struct RunRecord {
  std::filesystem::path dir;
  std::string strategy;
  std::string arch;
  std::uint64_t seed = 0;
  RoundReport final_round;
};

inline constexpr const char* kRoundsFile = "rounds.csv";
inline constexpr const char* kConfigFile = "config.txt";

std::vector<RunRecord> collect_runs(const std::filesystem::path& root);

struct SummaryRow {
  std::string strategy;
  std::string arch;
  std::size_t runs = 0;
  MeanStd queries;
  MeanStd agreement;
  MeanStd accuracy;
  MeanStd tpr;
  MeanStd fpr;
  MeanStd auc;
};

// One row per (strategy, arch), sorted by strategy then arch.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs);

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

}  // namespace extractkit
