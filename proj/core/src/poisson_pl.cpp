#include "fewmeta/poisson_pl.hpp"

#include <algorithm>
#include <cmath>

#include "fewmeta/distributions.hpp"
#include "fewmeta/errors.hpp"

namespace fewmeta {

namespace {

void require_tables(std::span<const CorrectedTable> tables, const char* who) {
  if (tables.empty()) throw DomainError(std::string(who) + ": no studies");
  for (const auto& t : tables) {
    if (!(t.size_trt > 0.0 && t.size_ctl > 0.0) || t.events_trt < 0.0 || t.events_ctl < 0.0) {
      throw DomainError(std::string(who) + ": invalid table");
    }
  }
}

}  // namespace

PlPoint pl_point_estimate(std::span<const CorrectedTable> tables, double tol, double start) {
  require_tables(tables, "pl_point_estimate");
  if (!(start > 0.0)) throw DomainError("pl_point_estimate: start must be positive");
  double theta = start;
  for (int it = 1; it <= kPlMaxIterations; ++it) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& t : tables) {
      const double w = 1.0 / (t.size_ctl + theta * t.size_trt);
      num += w * t.events_trt * t.size_ctl;
      den += w * t.events_ctl * t.size_trt;
    }
    if (!(num > 0.0 && den > 0.0)) {
      throw DomainError("pl_point_estimate: an arm has no events in any study");
    }
    const double next = num / den;
    const double step = std::abs(next - theta);
    theta = next;
    if (step < tol) return {std::log(theta), it};
  }
  throw ConvergenceError("pl_point_estimate: no convergence after " +
                         std::to_string(kPlMaxIterations) + " iterations");
}

double pl_variance(std::span<const CorrectedTable> tables, double log_theta) {
  require_tables(tables, "pl_variance");
  if (!std::isfinite(log_theta)) throw DomainError("pl_variance: log_theta must be finite");
  const double theta = std::exp(log_theta);
  double info = 0.0;
  for (const auto& t : tables) {
    const double x_all = t.events_trt + t.events_ctl;
    if (!(x_all > 0.0)) throw DomainError("pl_variance: a study has no events");
    const double alpha = theta * t.size_trt / (t.size_ctl + theta * t.size_trt);
    info += x_all * alpha * (1.0 - alpha);
  }
  return 1.0 / info;
}

double pl_tau2(std::span<const CorrectedTable> tables, double /*log_theta*/) {
  require_tables(tables, "pl_tau2");
  double sy = 0.0;
  double sn = 0.0;
  double snn = 0.0;
  for (const auto& t : tables) {
    const double n = t.events_trt + t.events_ctl;
    sy += t.events_trt;
    sn += n;
    snn += n * (n - 1.0);
  }
  if (!(sn > 0.0) || !(snn > 0.0)) return 0.0;
  const double mu = sy / sn;
  double ss = 0.0;
  for (const auto& t : tables) {
    const double n = t.events_trt + t.events_ctl;
    ss += (t.events_trt - n * mu) * (t.events_trt - n * mu);
  }
  const double tau2_p = (ss - sn * mu * (1.0 - mu)) / snn;
  const double one_minus = 1.0 - mu;
  return std::max(0.0, tau2_p / (one_minus * one_minus * one_minus * one_minus));
}

std::pair<double, double> pl_interval(std::span<const CorrectedTable> tables, double log_theta,
                                      PlDistribution distr, double level) {
  const double q = distr == PlDistribution::Normal
                       ? normal_critical(level)
                       : t_critical(level, static_cast<double>(tables.size()));
  const double half = q * std::sqrt(pl_variance(tables, log_theta) + pl_tau2(tables, log_theta));
  return {std::exp(log_theta - half), std::exp(log_theta + half)};
}

PlFit fit_pl(std::span<const CorrectedTable> tables, double tol) {
  PlFit fit;
  try {
    const auto point = pl_point_estimate(tables, tol);
    fit.log_theta = point.log_theta;
    fit.iterations = point.iterations;
    fit.converged = true;
  } catch (const ConvergenceError&) {
    fit.iterations = kPlMaxIterations;
    return fit;
  }
  fit.variance_log = pl_variance(tables, fit.log_theta);
  fit.tau2_theta = pl_tau2(tables, fit.log_theta);
  return fit;
}

}  // namespace fewmeta
