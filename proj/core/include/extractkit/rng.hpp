#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace extractkit {

// Counter-based SplitMix64 stream. Every distribution here is implemented on
// top of next_u64() so draws are identical across compilers and platforms
// (std:: distributions are not).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  double normal() noexcept;
  double gamma(double shape) noexcept;
  double beta(double a, double b) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Independent child stream keyed by (seed, tag); does not advance this one.
  RngStream derive(std::uint64_t tag) const noexcept;

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t z) noexcept;

// Uniformly chosen k-subset of [0, n) in draw order (partial Fisher-Yates).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, RngStream& rng);

}  // namespace extractkit
