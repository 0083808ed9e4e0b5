#include <doctest.h>

#include <cmath>
#include <set>

#include "stabledom/rng.hpp"

using namespace stabledom;

TEST_SUITE("rng") {
  TEST_CASE("Philox4x32-10 known-answer vectors") {
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("streams are reproducible and distinct") {
    PathStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    std::set<std::uint32_t> firsts;
    for (int i = 0; i < 10; ++i) {
      const auto va = a.next_u32();
      CHECK(va == b.next_u32());
      firsts.insert(va);
    }
    CHECK(firsts.size() == 10);
    PathStream a2(7, 3);
    CHECK(a2.next_u32() != c.next_u32());
    PathStream a3(7, 3);
    CHECK(a3.next_u32() != d.next_u32());
  }

  TEST_CASE("uniform draws lie in the open unit interval with the right moments") {
    PathStream s(1, 0);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = s.uniform();
      REQUIRE(u > 0.0);
      REQUIRE(u < 1.0);
      sum += u;
      sq += u * u;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(sq / n - 1.0 / 3.0) < 4.0 * std::sqrt(4.0 / 45.0 / n));
  }

  TEST_CASE("Poisson draws match mean and variance") {
    for (double lambda : {0.3, 4.0, 50.0, 1000.0}) {
      PathStream s(11, static_cast<std::uint64_t>(lambda * 10));
      const int n = 100000;
      double sum = 0.0, sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double k = static_cast<double>(s.poisson(lambda));
        sum += k;
        sq += k * k;
      }
      const double mean = sum / n;
      const double var = sq / n - mean * mean;
      CHECK(std::abs(mean - lambda) < 4.0 * std::sqrt(lambda / n));
      // Var of the sample variance is about (2 lambda^2 + lambda) / n.
      CHECK(std::abs(var - lambda) < 5.0 * std::sqrt((2.0 * lambda * lambda + lambda) / n));
    }
    PathStream s(1, 1);
    CHECK(s.poisson(0.0) == 0);
  }

  TEST_CASE("Poisson zero-probability for small means") {
    PathStream s(5, 5);
    const int n = 100000;
    int zeros = 0;
    for (int i = 0; i < n; ++i) zeros += s.poisson(2.0) == 0;
    const double p = std::exp(-2.0);
    CHECK(std::abs(zeros / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  }
}
