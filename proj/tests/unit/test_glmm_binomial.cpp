#include <doctest.h>

#include <cmath>
#include <vector>

#include "fewmeta/errors.hpp"
#include "fewmeta/glmm_binomial.hpp"
#include "oracles.hpp"

using namespace fewmeta;

namespace {

const std::vector<TwoByTwoTable> kThree{{12, 50, 8, 50}, {30, 120, 22, 120}, {7, 40, 11, 40}};

std::vector<TwoByTwoTable> swapped(const std::vector<TwoByTwoTable>& t) {
  std::vector<TwoByTwoTable> out;
  for (const auto& x : t) out.push_back(swap_arms(x));
  return out;
}

GlmmSpec spec_for(GlmmModel m) {
  GlmmSpec s;
  s.model = m;
  return s;
}

constexpr GlmmModel kModels[] = {GlmmModel::UM_FS, GlmmModel::UM_RS, GlmmModel::CM_AL,
                                 GlmmModel::CM_EL};

}  // namespace

TEST_CASE("Gauss-Hermite rules") {
  const auto r1 = gauss_hermite_rule(1);
  REQUIRE(r1.nodes.size() == 1);
  CHECK(r1.nodes[0] == doctest::Approx(0.0));
  CHECK(r1.weights[0] == doctest::Approx(1.0));

  const auto r2 = gauss_hermite_rule(2);
  CHECK(r2.nodes[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r2.nodes[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r2.weights[0] == doctest::Approx(0.5).epsilon(1e-12));

  for (int order : {3, 7, 15, 31}) {
    const auto r = gauss_hermite_rule(order);
    double s0 = 0, s2 = 0, s4 = 0;
    for (std::size_t j = 0; j < r.nodes.size(); ++j) {
      s0 += r.weights[j];
      s2 += r.weights[j] * r.nodes[j] * r.nodes[j];
      s4 += r.weights[j] * std::pow(r.nodes[j], 4);
    }
    CHECK(std::abs(s0 - 1) < 1e-12);
    CHECK(std::abs(s2 - 1) < 1e-10);
    if (order >= 3) CHECK(std::abs(s4 - 3) < 1e-8);
  }
  CHECK_THROWS_AS(gauss_hermite_rule(0), DomainError);
}

TEST_CASE("noncentral hypergeometric pmf") {
  CHECK(nchg_log_pmf(1, 2, 2, 2, 1.0) == doctest::Approx(std::log(4.0 / 6.0)).epsilon(1e-14));
  double total = 0;
  for (int x = 0; x <= 4; ++x) total += std::exp(nchg_log_pmf(x, 4, 5, 7, 2.5));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // direct summation oracle
  auto choose = [](int n, int r) { return std::tgamma(n + 1.0) / std::tgamma(r + 1.0) / std::tgamma(n - r + 1.0); };
  double denom = 0;
  for (int j = 0; j <= 4; ++j) denom += choose(5, j) * choose(7, 4 - j) * std::pow(2.5, j);
  CHECK(std::exp(nchg_log_pmf(2, 4, 5, 7, 2.5)) ==
        doctest::Approx(choose(5, 2) * choose(7, 2) * 6.25 / denom).epsilon(1e-12));
  CHECK(std::exp(nchg_log_pmf(4, 4, 5, 7, 1e12)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(nchg_log_pmf_log_psi(3, 6, 5, 7, 60.0) == doctest::Approx(nchg_log_pmf(3, 6, 5, 7, std::exp(60.0))).epsilon(1e-9));
  CHECK(std::exp(nchg_log_pmf_log_psi(5, 6, 5, 7, 400.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(nchg_log_pmf(5, 4, 5, 7, 1.0), DomainError);
  CHECK_THROWS_AS(nchg_log_pmf(1, 4, 5, 7, 0.0), DomainError);
}

TEST_CASE("identical tables: beta = 0 and tau = 0 for every model") {
  const std::vector<TwoByTwoTable> t(3, TwoByTwoTable{10, 100, 10, 100});
  for (auto m : kModels) {
    CAPTURE(to_string(m));
    const auto fit = fit_glmm(t, spec_for(m));
    CHECK(fit.converged);
    CHECK(std::abs(fit.beta_hat) < 1e-5);
    CHECK(fit.tau_hat < 1e-5);
    CHECK(fit.se_beta > 0);
  }
}

TEST_CASE("single study, tau fixed at 0: UM_FS gives the sample log odds ratio") {
  const std::vector<TwoByTwoTable> t{{15, 100, 10, 100}};
  GlmmSpec s;
  s.model = GlmmModel::UM_FS;
  s.fixed_tau = 0.0;
  const auto fit = fit_glmm(t, s);
  CHECK(fit.converged);
  CHECK(fit.beta_hat == doctest::Approx(std::log(15.0 / 85.0) - std::log(10.0 / 90.0)).epsilon(1e-6));
  CHECK(fit.se_beta == doctest::Approx(std::sqrt(1 / 15.0 + 1 / 85.0 + 1 / 10.0 + 1 / 90.0)).epsilon(1e-4));
}

TEST_CASE("UM_FS with tau fixed at 0 matches the IRLS oracle") {
  std::vector<std::array<double, 4>> rows;
  for (const auto& x : kThree)
    rows.push_back({double(x.events_trt), double(x.size_trt), double(x.events_ctl), double(x.size_ctl)});
  const double beta = oracle::irls_common_log_or(rows);
  GlmmSpec s;
  s.model = GlmmModel::UM_FS;
  s.fixed_tau = 0.0;
  const auto fit = fit_glmm(kThree, s);
  CHECK(fit.converged);
  CHECK(std::abs(fit.beta_hat - beta) < 1e-6);
}

TEST_CASE("CM_AL matches a grid search over the same quadrature objective") {
  auto f = [](double b, double t) { return conditional_log_likelihood(kThree, GlmmModel::CM_AL, b, t, 15); };
  const auto g = oracle::grid_maximize(f, -2.0, 2.0, 0.0, 2.0, 400, 3);
  const auto fit = fit_glmm(kThree, spec_for(GlmmModel::CM_AL));
  CHECK(fit.converged);
  CHECK(std::abs(fit.beta_hat - g.x) < 1e-3);
  CHECK(std::abs(fit.tau_hat - g.y) < 1e-3);
  CHECK(fit.loglik >= g.value - 1e-9);
  // frozen reference values
  CHECK(fit.beta_hat == doctest::Approx(0.178248).epsilon(1e-5));
  CHECK(fit.loglik == doctest::Approx(-6.684027321573).epsilon(1e-9));
}

TEST_CASE("CM_EL reference fit") {
  const auto fit = fit_glmm(kThree, spec_for(GlmmModel::CM_EL));
  CHECK(fit.converged);
  CHECK(fit.beta_hat == doctest::Approx(0.225221).epsilon(1e-5));
  CHECK(fit.tau_hat < 1e-5);
  CHECK(fit.loglik == doctest::Approx(-6.626011925392).epsilon(1e-9));
}

TEST_CASE("arm swap negates beta and preserves tau") {
  const std::vector<TwoByTwoTable> het{{25, 100, 10, 100}, {8, 100, 14, 100}, {40, 150, 20, 150}, {12, 80, 12, 80}};
  for (auto m : kModels) {
    CAPTURE(to_string(m));
    const auto a = fit_glmm(het, spec_for(m));
    const auto b = fit_glmm(swapped(het), spec_for(m));
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(std::abs(a.beta_hat + b.beta_hat) < 1e-4);
    CHECK(std::abs(a.tau_hat - b.tau_hat) < 1e-4);
    CHECK(a.tau_hat > 0.05);
  }
}

TEST_CASE("quadrature refinement does not lower the maximized log-likelihood") {
  const std::vector<TwoByTwoTable> het{{25, 100, 10, 100}, {8, 100, 14, 100}, {40, 150, 20, 150}};
  for (auto m : kModels) {
    CAPTURE(to_string(m));
    double previous = -INFINITY;
    for (int q : {15, 21, 31}) {
      GlmmSpec s = spec_for(m);
      s.quad_order = q;
      const auto fit = fit_glmm(het, s);
      REQUIRE(fit.converged);
      CHECK(fit.loglik >= previous - 1e-6);
      previous = fit.loglik;
    }
  }
}

TEST_CASE("rare events: CM_EL and CM_AL agree") {
  const std::vector<TwoByTwoTable> rare{{6, 200, 3, 200}, {9, 300, 7, 300}, {4, 150, 2, 150}, {12, 400, 9, 400}};
  const auto el = fit_glmm(rare, spec_for(GlmmModel::CM_EL));
  const auto al = fit_glmm(rare, spec_for(GlmmModel::CM_AL));
  REQUIRE(el.converged);
  REQUIRE(al.converged);
  CHECK(std::abs(el.beta_hat - al.beta_hat) < 0.02);
}

TEST_CASE("UM_RS reports a random-intercept SD") {
  const auto fit = fit_glmm(kThree, spec_for(GlmmModel::UM_RS));
  CHECK(fit.converged);
  REQUIRE(fit.sigma_u_hat.has_value());
  CHECK(*fit.sigma_u_hat >= 0);
  CHECK_FALSE(fit_glmm(kThree, spec_for(GlmmModel::UM_FS)).sigma_u_hat.has_value());
}

TEST_CASE("intervals") {
  GlmmFit fit;
  fit.beta_hat = 0.3;
  fit.se_beta = 0.2;
  fit.converged = true;
  const auto [wl, wu] = glmm_interval(fit, GlmmIntervalKind::Wald, 0.95, 3);
  CHECK(wl == doctest::Approx(-0.091993).epsilon(1e-6));
  CHECK(wu == doctest::Approx(0.691993).epsilon(1e-6));
  const auto [tl, tu] = glmm_interval(fit, GlmmIntervalKind::T, 0.95, 3);
  CHECK((tu - tl) / 2 == doctest::Approx(4.302653 * 0.2).epsilon(1e-6));
  fit.se_beta = 0.0;
  const auto [dl, du] = glmm_interval(fit, GlmmIntervalKind::Wald, 0.95, 3);
  CHECK(dl == du);
  fit.converged = false;
  CHECK_THROWS_AS(glmm_interval(fit, GlmmIntervalKind::Wald, 0.95, 3), DomainError);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(fit_glmm(std::vector<TwoByTwoTable>{}, spec_for(GlmmModel::CM_AL)), DomainError);
  CHECK_THROWS_AS(fit_glmm(std::vector<TwoByTwoTable>{{3, 10, 2, 10}}, spec_for(GlmmModel::CM_AL)), DomainError);
  CHECK(to_string(GlmmModel::CM_EL) == "CM.EL");
}
