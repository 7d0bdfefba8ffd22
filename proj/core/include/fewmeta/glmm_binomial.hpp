#pragma once

// Binomial generalized linear mixed models for the log odds ratio, fitted by
// maximizing the Gauss-Hermite approximated marginal likelihood.
//
//   UM_FS  fixed study intercepts, random treatment effect
//   UM_RS  random study intercepts and random treatment effect (independent)
//   CM_AL  conditional on total events, binomial approximation
//   CM_EL  conditional on total events, Fisher noncentral hypergeometric

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fewmeta/tables.hpp"

namespace fewmeta {

enum class GlmmModel { UM_FS, UM_RS, CM_AL, CM_EL };

struct GlmmSpec {
  GlmmModel model = GlmmModel::UM_FS;
  int quad_order = 15;
  int max_iter = 200;
  double tol = 1e-6;  // gradient tolerance of the quasi-Newton search
  /// When set, tau is held at this value instead of being estimated.
  std::optional<double> fixed_tau;
};

struct GlmmFit {
  double beta_hat = 0.0;
  double tau_hat = 0.0;
  std::optional<double> sigma_u_hat;
  double se_beta = 0.0;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string message;
};

/// Nodes and weights for expectations against the standard normal density.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

QuadratureRule gauss_hermite_rule(int order);

/// log P(X1 = x1) for Fisher's noncentral hypergeometric distribution with
/// margins (n1, n0), total t and odds ratio psi.
double nchg_log_pmf(std::int64_t x1, std::int64_t t, std::int64_t n1, std::int64_t n0,
                    double psi);
/// Same, parameterized by log(psi).
double nchg_log_pmf_log_psi(std::int64_t x1, std::int64_t t, std::int64_t n1, std::int64_t n0,
                            double log_psi);

/// Marginal log-likelihood of a conditional model (CM_AL or CM_EL) at (beta, tau).
double conditional_log_likelihood(std::span<const TwoByTwoTable> tables, GlmmModel model,
                                  double beta, double tau, int quad_order);

/// Marginal log-likelihood of UM_FS at (beta, tau, intercepts).
double um_fs_log_likelihood(std::span<const TwoByTwoTable> tables, double beta, double tau,
                            std::span<const double> intercepts, int quad_order);

/// Marginal log-likelihood of UM_RS at (beta, tau, alpha, sigma_u).
double um_rs_log_likelihood(std::span<const TwoByTwoTable> tables, double beta, double tau,
                            double alpha, double sigma_u, int quad_order);

/// Fits the model. Non-convergence (iteration cap, non-positive-definite
/// observed information) is reported through `converged == false`.
GlmmFit fit_glmm(std::span<const TwoByTwoTable> tables, const GlmmSpec& spec);
GlmmFit fit_glmm(const MetaDataset& data, const GlmmSpec& spec);

enum class GlmmIntervalKind { Wald, T };

/// beta_hat +/- quantile * se_beta (t with k-1 df for T). DomainError on a
/// non-converged fit.
std::pair<double, double> glmm_interval(const GlmmFit& fit, GlmmIntervalKind kind, double level,
                                        std::size_t k);

std::string to_string(GlmmModel m);

}  // namespace fewmeta
