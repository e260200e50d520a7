#include "extractkit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "extractkit/config.hpp"
#include "extractkit/errors.hpp"

namespace extractkit {

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

std::vector<RunRecord> collect_runs(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw ConfigError("report: " + root.string() + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == kRoundsFile) dirs.push_back(entry.path().parent_path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<RunRecord> runs;
  for (const auto& dir : dirs) {
    if (!fs::exists(dir / kConfigFile)) throw FormatError("report: " + dir.string() + " has no " + kConfigFile);
    const ExperimentConfig cfg = ExperimentConfig::load(dir / kConfigFile);
    const auto rounds = read_rounds_csv(dir / kRoundsFile);
    if (rounds.empty()) throw FormatError("report: " + (dir / kRoundsFile).string() + " has no rows");
    runs.push_back({dir, cfg.get("strategy"), cfg.get("arch"), cfg.get_u64("seed"), rounds.back()});
  }
  return runs;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs) {
  std::map<std::pair<std::string, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : runs) groups[{r.strategy, r.arch}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, members] : groups) {
    auto stat = [&](auto field) {
      std::vector<double> v;
      for (const RunRecord* r : members) v.push_back(field(r->final_round));
      return mean_std(v);
    };
    SummaryRow row;
    row.strategy = key.first;
    row.arch = key.second;
    row.runs = members.size();
    row.queries = stat([](const RoundReport& r) { return static_cast<double>(r.queries); });
    row.agreement = stat([](const RoundReport& r) { return r.agreement; });
    row.accuracy = stat([](const RoundReport& r) { return r.accuracy; });
    row.tpr = stat([](const RoundReport& r) { return r.tpr; });
    row.fpr = stat([](const RoundReport& r) { return r.fpr; });
    row.auc = stat([](const RoundReport& r) { return r.auc; });
    out.push_back(row);
  }
  return out;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "strategy,arch,runs,queries_mean,agreement_mean,agreement_std,accuracy_mean,accuracy_std,"
         "tpr_mean,tpr_std,fpr_mean,fpr_std,auc_mean,auc_std\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.1f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  r.strategy.c_str(), r.arch.c_str(), r.runs, r.queries.mean, r.agreement.mean, r.agreement.std,
                  r.accuracy.mean, r.accuracy.std, r.tpr.mean, r.tpr.std, r.fpr.mean, r.fpr.std, r.auc.mean,
                  r.auc.std);
    out << buf;
  }
}

}  // namespace extractkit
