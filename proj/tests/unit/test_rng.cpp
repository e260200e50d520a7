#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "extractkit/rng.hpp"

using extractkit::RngStream;

TEST_SUITE("rng") {

// Reference SplitMix64: state += golden gamma, output = finalizer(state).
static std::uint64_t reference_splitmix(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

TEST_CASE("stream matches the published SplitMix64 sequence") {
  RngStream rng(0);
  CHECK(rng.next_u64() == 0xe220a8397b1dcdafULL);
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL}) {
    RngStream s(seed);
    std::uint64_t state = seed;
    for (int i = 0; i < 100; ++i) REQUIRE(s.next_u64() == reference_splitmix(state));
  }
}

TEST_CASE("same seed gives the same draws across every distribution") {
  RngStream a(7), b(7);
  for (int i = 0; i < 200; ++i) {
    CHECK(a.uniform() == b.uniform());
    CHECK(a.normal() == b.normal());
    CHECK(a.below(17) == b.below(17));
    CHECK(a.beta(2.0, 3.0) == b.beta(2.0, 3.0));
  }
  CHECK(a.counter() == b.counter());
}

TEST_CASE("uniform stays in [0,1) and below(n) in range") {
  RngStream rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(rng.below(13) < 13);
  }
  CHECK(rng.below(1) == 0);
}

TEST_CASE("below is close to uniform") {
  RngStream rng(11);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(10)];
  for (int c : counts) CHECK(std::abs(c / double(n) - 0.1) < 0.01);
}

TEST_CASE("normal has unit moments") {
  RngStream rng(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("beta and gamma means") {
  RngStream rng(9);
  const int n = 100000;
  double g = 0, g_small = 0, b = 0;
  for (int i = 0; i < n; ++i) {
    g += rng.gamma(3.0);
    g_small += rng.gamma(0.5);
    b += rng.beta(2.0, 6.0);
  }
  CHECK(g / n == doctest::Approx(3.0).epsilon(0.02));
  CHECK(g_small / n == doctest::Approx(0.5).epsilon(0.03));
  CHECK(b / n == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("derive is pure and decorrelated") {
  RngStream parent(1234);
  parent.next_u64();
  const auto before = parent.counter();
  RngStream c1 = parent.derive(1);
  RngStream c1b = parent.derive(1);
  RngStream c2 = parent.derive(2);
  CHECK(parent.counter() == before);
  CHECK(c1.seed() == c1b.seed());
  CHECK(c1.seed() != c2.seed());
  CHECK(RngStream(1234).derive(1).seed() == c1.seed());
  CHECK(c1.next_u64() != c2.next_u64());
}

TEST_CASE("sample_without_replacement returns distinct in-range indices") {
  RngStream rng(77);
  for (std::size_t k : {0u, 1u, 5u, 20u}) {
    auto idx = extractkit::sample_without_replacement(20, k, rng);
    REQUIRE(idx.size() == k);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    CHECK(uniq.size() == k);
    for (auto i : idx) CHECK(i < 20);
  }
}

TEST_CASE("shuffle is a permutation") {
  RngStream rng(8);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  rng.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

}
