#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "modalms/rng.hpp"

using namespace modalms;

TEST_SUITE("rng") {
  TEST_CASE("same seed same stream") {
    rng::Engine a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  }

  TEST_CASE("derived streams differ by key and stage") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t k = 0; k < 50; ++k) {
      seeds.insert(rng::derive(7, k));
      seeds.insert(rng::derive(7, rng::Stage::generate, k));
      seeds.insert(rng::derive(7, rng::Stage::mask, k));
    }
    CHECK(seeds.size() == 150);
  }

  TEST_CASE("uniform01 in range with correct moments") {
    rng::Engine e(1);
    double sum = 0.0, sum2 = 0.0;
    int n = 100000;
    for (int i = 0; i < n; ++i) {
      double u = e.uniform01();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      sum += u;
      sum2 += u * u;
    }
    double mean = sum / n;
    double var = sum2 / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12).epsilon(0.03));
  }

  TEST_CASE("uniform01_open never returns zero") {
    rng::Engine e(2);
    for (int i = 0; i < 100000; ++i) CHECK(e.uniform01_open() > 0.0);
  }

  TEST_CASE("normal moments and symmetry") {
    rng::Engine e(3);
    int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double z = e.normal(2.0, 3.0);
      sum += z;
      sum2 += z * z;
    }
    double mean = sum / n;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.02));
    CHECK(sum2 / n - mean * mean == doctest::Approx(9.0).epsilon(0.02));
  }

  TEST_CASE("bernoulli frequency") {
    rng::Engine e(4);
    int hits = 0, n = 100000;
    for (int i = 0; i < n; ++i) hits += e.bernoulli(0.75);
    CHECK(hits / double(n) == doctest::Approx(0.75).epsilon(0.01));
  }

  TEST_CASE("categorical matches weight proportions") {
    rng::Engine e(5);
    std::array<double, 3> w = {1.0, 2.0, 1.0};
    std::array<int, 3> counts = {0, 0, 0};
    int n = 100000;
    for (int i = 0; i < n; ++i) counts[e.categorical(w)]++;
    CHECK(counts[0] / double(n) == doctest::Approx(0.25).epsilon(0.05));
    CHECK(counts[1] / double(n) == doctest::Approx(0.50).epsilon(0.05));
    CHECK(counts[2] / double(n) == doctest::Approx(0.25).epsilon(0.05));
  }

  TEST_CASE("categorical rejects bad weights") {
    rng::Engine e(6);
    std::vector<double> neg = {1.0, -0.5};
    CHECK_THROWS_AS(e.categorical(neg), ConfigError);
    std::vector<double> zero = {0.0, 0.0};
    CHECK_THROWS_AS(e.categorical(zero), ConfigError);
  }

  TEST_CASE("categorical zero-weight entries never drawn") {
    rng::Engine e(7);
    std::array<double, 3> w = {0.0, 1.0, 0.0};
    for (int i = 0; i < 1000; ++i) CHECK(e.categorical(w) == 1);
  }

  TEST_CASE("mix64 is deterministic and spreads nearby inputs") {
    CHECK(rng::mix64(0) == rng::mix64(0));
    CHECK(rng::mix64(1) != rng::mix64(2));
    std::set<std::uint64_t> outs;
    for (std::uint64_t i = 0; i < 1000; ++i) outs.insert(rng::mix64(i));
    CHECK(outs.size() == 1000);
  }
}
