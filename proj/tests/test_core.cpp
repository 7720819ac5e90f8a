#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <set>
#include <vector>

#include "eispec/common.hpp"
#include "eispec/parallel.hpp"
#include "eispec/rng.hpp"

#include "helpers.hpp"

using namespace eispec;

TEST_CASE("rng streams are deterministic and seed-sensitive") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    REQUIRE(va == b.next_u64());
  }
  bool any_diff = false;
  Rng a2(42);
  for (int i = 0; i < 64; ++i) any_diff |= (a2.next_u64() != c.next_u64());
  REQUIRE(any_diff);
}

TEST_CASE("derived seeds separate substreams") {
  const std::uint64_t master = 7;
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i)
    seen.insert(derive_seed(master, i));
  REQUIRE(seen.size() == 1000);
  REQUIRE(derive_seed(master, 3, 5) != derive_seed(master, 5, 3));
}

TEST_CASE("uniform01 lies in [0,1) and has plausible mean") {
  Rng r(123);
  double acc = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    acc += u;
  }
  REQUIRE(std::abs(acc / n - 0.5) < 0.01);
}

TEST_CASE("normal moments match standard normal") {
  Rng r(7);
  const int n = 200000;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = r.normal();
  REQUIRE(std::abs(testref::mean(x)) < 0.01);
  REQUIRE(std::abs(testref::sample_variance(x) - 1.0) < 0.02);
}

TEST_CASE("bernoulli frequency approaches p") {
  Rng r(99);
  const double p = 0.2;
  int hits = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) hits += r.bernoulli(p) ? 1 : 0;
  REQUIRE(std::abs(static_cast<double>(hits) / n - p) < 0.01);
}

TEST_CASE("shuffle is a permutation and deterministic") {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  auto w = v;
  Rng r1(5), r2(5);
  r1.shuffle(v);
  r2.shuffle(w);
  REQUIRE(v == w);
  std::set<int> s(v.begin(), v.end());
  REQUIRE(s.size() == 100);
}

TEST_CASE("parallel_for covers every index once, any worker count") {
  for (const char* workers : {"1", "3"}) {
    setenv("EISPEC_WORKERS", workers, 1);
    std::vector<std::atomic<int>> hits(257);
    for (auto& h : hits) h = 0;
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) REQUIRE(h == 1);
  }
  unsetenv("EISPEC_WORKERS");
}

TEST_CASE("parallel_for propagates exceptions") {
  setenv("EISPEC_WORKERS", "2", 1);
  REQUIRE_THROWS_AS(parallel_for(16,
                                 [](std::size_t i) {
                                   if (i == 7)
                                     throw data_error("boom");
                                 }),
                    data_error);
  unsetenv("EISPEC_WORKERS");
}

TEST_CASE("variance helper uses n-1 and rejects tiny samples") {
  std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  REQUIRE_THAT(variance_of(x), Catch::Matchers::WithinAbs(5.0 / 3.0, 1e-12));
  std::vector<double> one = {1.0};
  REQUIRE_THROWS_AS(variance_of(one), stats_error);
}
