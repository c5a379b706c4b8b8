#include <doctest.h>

#include <cmath>
#include <vector>

#include "probeconv/rng.hpp"
#include "probeconv/stats.hpp"

using namespace probeconv;

TEST_SUITE_BEGIN("rng");

TEST_CASE("normal stream is addressable and order independent") {
  const NormalStream ns({42, 17});
  std::vector<double> seq(64);
  ns.fill(0, seq);
  // Random access matches the sequential fill, including odd offsets.
  for (std::uint64_t i = 0; i < 64; ++i) CHECK(ns.at(i) == seq[size_t(i)]);
  std::vector<double> tail(31);
  ns.fill(33, tail);
  for (std::uint64_t i = 0; i < 31; ++i) CHECK(tail[size_t(i)] == seq[size_t(33 + i)]);
}

TEST_CASE("streams and attempts are independent") {
  const NormalStream a({1, 2});
  const NormalStream b({1, 3});
  const NormalStream c({2, 2});
  const NormalStream d({1, 2}, 1);
  CHECK(a.at(0) != b.at(0));
  CHECK(a.at(0) != c.at(0));
  CHECK(a.at(0) != d.at(0));
  CHECK(a.at(5) == NormalStream({1, 2}).at(5));
}

TEST_CASE("normal moments and tail behave like N(0,1)") {
  const NormalStream ns({7, 77});
  const int n = 200000;
  std::vector<double> xs(n);
  ns.fill(0, xs);
  double sum = 0.0, sum2 = 0.0, sum3 = 0.0;
  int beyond2 = 0;
  for (double x : xs) {
    sum += x;
    sum2 += x * x;
    sum3 += x * x * x;
    beyond2 += std::abs(x) > 2.0 ? 1 : 0;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(double(n)));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(sum3 / n) < 0.05);
  CHECK(double(beyond2) / n == doctest::Approx(0.0455).epsilon(0.15));
}

TEST_CASE("counter rng next_below is unbiased across a small range") {
  CounterRng rng(5, 5);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[size_t(rng.next_below(7))];
  for (int c : counts) CHECK(std::abs(c - n / 7) < 5 * std::sqrt(double(n) / 7));
}

TEST_CASE("derive_stream separates discriminators") {
  CHECK(derive_stream(1, 2, 3) != derive_stream(1, 3, 2));
  CHECK(derive_stream(1, 2, 3) != derive_stream(2, 2, 3));
  CHECK(derive_stream(1, 2, 3) == derive_stream(1, 2, 3));
}

TEST_SUITE_END();
