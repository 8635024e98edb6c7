#include <cmath>
#include <random>

#include "attiqa/error.hpp"
#include "attiqa/metrics.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace attiqa;
using V = std::vector<double>;

TEST_CASE("srocc examples") {
  CHECK(metrics::srocc(V{1, 2, 3}, V{10, 20, 30}).value == doctest::Approx(1.0));
  CHECK(metrics::srocc(V{1, 2, 3}, V{3, 2, 1}).value == doctest::Approx(-1.0));
  const auto r = metrics::srocc(V{1, 2, 3, 4}, V{1, 3, 2, 4});
  CHECK(r.value == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.n == 4);
}

TEST_CASE("plcc examples") {
  const V x{0.5, 1.5, 2.25, 7.0};
  V y;
  for (double v : x) y.push_back(-2 * v + 7);
  CHECK(metrics::plcc(x, x).value == doctest::Approx(1.0));
  CHECK(metrics::plcc(x, y).value == doctest::Approx(-1.0));
  CHECK(metrics::plcc(V{0, 1, 2}, V{0, 1, 3}).value == doctest::Approx(oracle::pearson({0, 1, 2}, {0, 1, 3})).epsilon(1e-14));
  CHECK(metrics::plcc(V{0, 1, 2}, V{0, 1, 3}).value == doctest::Approx(9.0 / std::sqrt(84.0)));
}

TEST_CASE("average ranks match the counting oracle on ties") {
  const V v{3, 1, 3, 2, 3, 1};
  CHECK(metrics::average_ranks(v) == oracle::ranks(v));
  CHECK(metrics::average_ranks(v) == V{5, 1.5, 5, 3, 5, 1.5});
}

TEST_CASE("random vectors agree with oracles") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 3 + rng() % 48;
    V x(n), y(n);
    const bool ties = t % 3 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ties ? static_cast<double>(rng() % 4) : std::uniform_real_distribution<>(-5, 5)(rng);
      y[i] = std::uniform_real_distribution<>(-5, 5)(rng);
    }
    try {
      CHECK(std::abs(metrics::srocc(x, y).value - oracle::spearman(x, y)) < 1e-9);
      CHECK(std::abs(metrics::plcc(x, y).value - oracle::pearson(x, y)) < 1e-9);
    } catch (const DegenerateInputError&) {
      // all-equal draw, skipped
    }
  }
}

TEST_CASE("correlation input errors") {
  CHECK_THROWS_AS(metrics::srocc(V{1, 2}, V{1, 2, 3}), ValidationError);
  CHECK_THROWS_AS(metrics::plcc(V{1}, V{1}), ValidationError);
  CHECK_THROWS_AS(metrics::plcc(V{1, NAN}, V{1, 2}), ValidationError);
  CHECK_THROWS_AS(metrics::srocc(V{1, 1, 1}, V{1, 2, 3}), DegenerateInputError);
  CHECK_THROWS_AS(metrics::plcc(V{1, 2, 3}, V{4, 4, 4}), DegenerateInputError);
}

TEST_CASE("median") {
  CHECK(metrics::median(V{0.91}) == 0.91);
  CHECK(metrics::median(V{0.1, 0.3, 0.2}) == 0.2);
  CHECK(metrics::median(V{0.1, 0.2, 0.3, 0.4}) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(metrics::median(V{}), ValidationError);
}

TEST_CASE("win rate") {
  using I = std::vector<int>;
  const I a{0, 1, 1, 0, 1, 0, 0, 1};
  I comp;
  for (int v : a) comp.push_back(1 - v);
  CHECK(metrics::win_rate(a, a) == 1.0);
  CHECK(metrics::win_rate(a, comp) == 0.0);
  CHECK(metrics::win_rate(I{0, 1, 1, 0}, I{0, 1, 1, 1}) == 0.75);
  CHECK_THROWS_AS(metrics::win_rate(I{0}, I{0, 1}), ValidationError);
  CHECK_THROWS_AS(metrics::win_rate(I{}, I{}), ValidationError);
}
