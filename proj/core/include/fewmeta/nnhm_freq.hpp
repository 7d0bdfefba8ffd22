#pragma once

// Frequentist inference in the normal-normal hierarchical model
//   y_i ~ N(mu, se_i^2 + tau^2)
// with standard errors treated as known.

#include <optional>
#include <span>
#include <string>

#include "fewmeta/tables.hpp"

namespace fewmeta {

enum class TauMethod { DL, ML, REML, EB };

struct TauControl {
  double tolerance = 1e-10;  // absolute, on tau^2
  int max_iter = 100;
};

struct HeterogeneityEstimate {
  double tau = 0.0;
  TauMethod method = TauMethod::DL;
  int iterations = 0;
  bool converged = true;
  double tolerance = 0.0;

  double tau2() const noexcept { return tau * tau; }
};

enum class IntervalKind { Wald, Hksj, Mhksj, T, Hpd };

struct PooledResult {
  double mu_hat = 0.0;
  double se_mu = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  IntervalKind interval_kind = IntervalKind::Wald;
  double tau_used = 0.0;
  std::optional<int> df;

  double length() const noexcept { return upper - lower; }
};

struct CochranQ {
  double q = 0.0;
  double fe_mean = 0.0;
};

struct PooledMean {
  double mu_hat = 0.0;
  double se_mu = 0.0;
};

CochranQ cochran_q(std::span<const StudyEstimate> estimates);

/// Estimates tau. Never throws on non-convergence: the last iterate is
/// returned with `converged == false`.
HeterogeneityEstimate estimate_tau(std::span<const StudyEstimate> estimates, TauMethod method,
                                   const TauControl& control = {});

/// Marginal (restricted) log-likelihood in tau^2, up to an additive constant.
double nnhm_log_likelihood(std::span<const StudyEstimate> estimates, double tau2,
                           bool restricted);

/// Generalized Q statistic sum w*_i (y_i - mu_hat(tau^2))^2.
double generalized_q(std::span<const StudyEstimate> estimates, double tau2);

PooledMean pool(std::span<const StudyEstimate> estimates, double tau);

PooledResult interval_wald(double mu_hat, double se_mu, double level, double tau_used = 0.0);

/// Variance scale factor q of the Hartung-Knapp-Sidik-Jonkman adjustment.
double hksj_scale(std::span<const StudyEstimate> estimates, double tau);

/// HKSJ interval with k-1 degrees of freedom; `modified` floors the scale at 1.
PooledResult interval_hksj(std::span<const StudyEstimate> estimates, double tau, double level,
                           bool modified);

/// Plain t-based interval around the pooled mean (df = k-1), no rescaling.
PooledResult interval_t(std::span<const StudyEstimate> estimates, double tau, double level);

/// I^2 with the Higgins-Thompson typical within-study variance.
double i_squared(std::span<const StudyEstimate> estimates, double tau);
double typical_within_variance(std::span<const StudyEstimate> estimates);

std::string to_string(TauMethod m);
std::string to_string(IntervalKind k);

}  // namespace fewmeta
