#include <doctest.h>

#include <cmath>

#include "fewmeta/errors.hpp"
#include "fewmeta/normal_mixture.hpp"
#include "oracles.hpp"

using namespace fewmeta;

TEST_CASE("single normal: HPD equals the equal-tailed interval") {
  const NormalMixture m({1.0}, {2.0}, {1.0});
  const auto h = hpd_interval(m, 0.95);
  const auto [lo, hi] = equal_tailed_interval(m, 0.95);
  CHECK(h.lower == doctest::Approx(1.0 - 2.0 * 1.959964).epsilon(1e-6));
  CHECK(h.upper == doctest::Approx(1.0 + 2.0 * 1.959964).epsilon(1e-6));
  CHECK(lo == doctest::Approx(h.lower).epsilon(1e-6));
  CHECK(hi == doctest::Approx(h.upper).epsilon(1e-6));
  CHECK(h.mass == doctest::Approx(0.95).epsilon(1e-6));
  CHECK(m.mode() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m.quantile(0.5) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("level close to one widens towards the support") {
  const NormalMixture m({0.0}, {1.0}, {1.0});
  const auto h = hpd_interval(m, 0.999999);
  CHECK(h.upper > 4.8);
  CHECK(h.lower < -4.8);
}

TEST_CASE("skewed two-component mixture matches an exhaustive grid scan") {
  const NormalMixture m({0.0, 3.0}, {1.0, 1.0}, {0.8, 0.2});
  const auto h = hpd_interval(m, 0.95);
  const double lo = -6.0, hi = 9.0;
  const int points = 10000;
  const double step = (hi - lo) / (points - 1);
  const auto grid = oracle::shortest_grid_interval([&](double x) { return m.cdf(x); }, lo, hi,
                                                   points, 0.95);
  // length is flat at the optimum, so compare lengths against the grid and
  // endpoints against a direct length minimization
  CHECK(h.upper - h.lower <= grid.second - grid.first + 1e-9);
  CHECK(grid.second - grid.first - (h.upper - h.lower) <= 2 * step);
  const oracle::Mixture om{{0.8, 0.2}, {0.0, 3.0}, {1.0, 1.0}};
  const auto [ol, ou] = oracle::hpd_by_length_minimization(om, lo, hi, 0.95);
  CHECK(std::abs(h.lower - ol) < 1e-6);
  CHECK(std::abs(h.upper - ou) < 1e-6);
  CHECK(m.pdf(h.lower) == doctest::Approx(m.pdf(h.upper)).epsilon(1e-6));
  const auto [et_lo, et_hi] = equal_tailed_interval(m, 0.95);
  CHECK(h.upper - h.lower <= et_hi - et_lo);
}

TEST_CASE("well separated modes raise ShapeError") {
  const NormalMixture m({-5.0, 5.0}, {0.5, 0.5}, {0.5, 0.5});
  CHECK_THROWS_AS(hpd_interval(m, 0.9), ShapeError);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(NormalMixture({}, {}, {}), DomainError);
  CHECK_THROWS_AS(NormalMixture({0.0}, {0.0}, {1.0}), DomainError);
  CHECK_THROWS_AS(NormalMixture({0.0, 1.0}, {1.0}, {1.0}), DomainError);
}
