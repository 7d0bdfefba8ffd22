#pragma once

// Poisson-normal risk-ratio model estimated by profile likelihood: a
// fixed-point estimate of the common rate ratio under homogeneity, its
// variance on the log scale, and a moment estimate of between-study
// variance that widens the interval.

#include <span>
#include <utility>

#include "fewmeta/tables.hpp"

namespace fewmeta {

struct PlPoint {
  double log_theta = 0.0;
  int iterations = 0;
};

struct PlFit {
  double log_theta = 0.0;
  double variance_log = 0.0;
  double tau2_theta = 0.0;
  int iterations = 0;
  bool converged = false;
};

enum class PlDistribution { Normal, T };

inline constexpr int kPlMaxIterations = 1000;

/// theta <- sum x_t n_c / (n_c + theta n_t) / sum x_c n_t / (n_c + theta n_t),
/// iterated until successive values differ by less than `tol`. Throws
/// ConvergenceError after kPlMaxIterations.
PlPoint pl_point_estimate(std::span<const CorrectedTable> tables, double tol = 1e-7,
                          double start = 1.0);

/// Var(log theta) = 1 / sum (x_t + x_c) alpha (1 - alpha), alpha = theta n_t / (n_c + theta n_t).
double pl_variance(std::span<const CorrectedTable> tables, double log_theta);

/// Moment estimate of the between-study variance on the log scale, truncated at 0.
double pl_tau2(std::span<const CorrectedTable> tables, double log_theta);

/// Interval on the ratio scale. The t quantile uses df = k.
std::pair<double, double> pl_interval(std::span<const CorrectedTable> tables, double log_theta,
                                      PlDistribution distr, double level = 0.95);

/// Point estimate, variance, and heterogeneity in one call; non-convergence
/// of the fixed point is reported through `converged`.
PlFit fit_pl(std::span<const CorrectedTable> tables, double tol = 1e-7);

}  // namespace fewmeta
