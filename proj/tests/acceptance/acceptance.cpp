// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
//   extractkit_acceptance            all criteria
//   extractkit_acceptance 5 9        only the listed ones

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <set>

#include <spdlog/spdlog.h>

#include "acceptance/criteria.hpp"

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : acceptance::criteria()) {
    if (!only.empty() && only.count(c.id) == 0) continue;
    const auto t0 = std::chrono::steady_clock::now();
    acceptance::Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s) [%.1fs]: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
