#include "fewmeta/glmm_binomial.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fewmeta/distributions.hpp"
#include "fewmeta/errors.hpp"
#include "fewmeta/optimize.hpp"

namespace fewmeta {

QuadratureRule gauss_hermite_rule(int order) {
  if (order < 1) throw DomainError("gauss_hermite_rule: order must be >= 1");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    jacobi(i, i - 1) = std::sqrt(static_cast<double>(i));
    jacobi(i - 1, i) = jacobi(i, i - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  double total = 0.0;
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v = solver.eigenvectors()(0, i);
    rule.weights[i] = v * v;
    total += rule.weights[i];
  }
  for (auto& w : rule.weights) w /= total;
  // Symmetrize so that the odd moments vanish exactly.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

namespace {

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Binomial log-pmf on the logit scale, without the binomial coefficient.
double binomial_kernel(double x, double n, double eta) { return x * eta - n * softplus(eta); }

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double e : v) acc += std::exp(e - m);
  return m + std::log(acc);
}

// Per-study constants reused across likelihood evaluations.
struct StudyData {
  double x1, n1, x0, n0;
  std::int64_t ix1, in1, in0, it;
  double log_const;         // binomial coefficients of the unconditional models
  double log_const_al;      // binomial coefficient of the conditional binomial
  double log_offset;        // log(n1/n0)
  std::vector<double> nchg_base;  // log C(n1,j) + log C(n0,t-j) over the support
  std::int64_t support_lo = 0;
};

std::vector<StudyData> prepare(std::span<const TwoByTwoTable> tables, bool need_nchg) {
  std::vector<StudyData> out;
  out.reserve(tables.size());
  for (const auto& t : tables) {
    validate_table(t);
    StudyData s{};
    s.ix1 = t.events_trt;
    s.in1 = t.size_trt;
    s.in0 = t.size_ctl;
    s.it = t.events_trt + t.events_ctl;
    s.x1 = static_cast<double>(t.events_trt);
    s.n1 = static_cast<double>(t.size_trt);
    s.x0 = static_cast<double>(t.events_ctl);
    s.n0 = static_cast<double>(t.size_ctl);
    s.log_const = log_choose(t.size_trt, t.events_trt) + log_choose(t.size_ctl, t.events_ctl);
    s.log_const_al = log_choose(s.it, t.events_trt);
    s.log_offset = std::log(s.n1 / s.n0);
    if (need_nchg) {
      s.support_lo = std::max<std::int64_t>(0, s.it - s.in0);
      const std::int64_t hi = std::min(s.it, s.in1);
      for (std::int64_t j = s.support_lo; j <= hi; ++j) {
        s.nchg_base.push_back(log_choose(s.in1, j) + log_choose(s.in0, s.it - j));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

double nchg_log_pmf_cached(const StudyData& s, double log_psi) {
  thread_local std::vector<double> terms;
  terms.resize(s.nchg_base.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    terms[i] = s.nchg_base[i] + static_cast<double>(s.support_lo + static_cast<std::int64_t>(i)) * log_psi;
  }
  const double lse = log_sum_exp(terms);
  return terms[static_cast<std::size_t>(s.ix1 - s.support_lo)] - lse;
}

double study_loglik_conditional(const StudyData& s, GlmmModel model, double beta, double tau,
                                const QuadratureRule& rule) {
  thread_local std::vector<double> terms;
  terms.resize(rule.nodes.size());
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double theta = beta + tau * rule.nodes[j];
    double l;
    if (model == GlmmModel::CM_AL) {
      l = s.log_const_al + binomial_kernel(s.x1, static_cast<double>(s.it), theta + s.log_offset);
    } else {
      l = nchg_log_pmf_cached(s, theta);
    }
    terms[j] = std::log(rule.weights[j]) + l;
  }
  return log_sum_exp(terms);
}

double loglik_conditional(std::span<const StudyData> data, GlmmModel model, double beta,
                          double tau, const QuadratureRule& rule) {
  double ll = 0.0;
  for (const auto& s : data) {
    if (s.it == 0) continue;  // a study with no events carries no conditional information
    ll += study_loglik_conditional(s, model, beta, tau, rule);
  }
  return ll;
}

double loglik_um_fs(std::span<const StudyData> data, double beta, double tau,
                    std::span<const double> alpha, const QuadratureRule& rule) {
  thread_local std::vector<double> terms;
  terms.resize(rule.nodes.size());
  double ll = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double half = 0.5 * (beta + tau * rule.nodes[j]);
      terms[j] = std::log(rule.weights[j]) + binomial_kernel(s.x1, s.n1, alpha[i] + half) +
                 binomial_kernel(s.x0, s.n0, alpha[i] - half);
    }
    ll += s.log_const + log_sum_exp(terms);
  }
  return ll;
}

double loglik_um_rs(std::span<const StudyData> data, double beta, double tau, double alpha,
                    double sigma_u, const QuadratureRule& rule) {
  const std::size_t q = rule.nodes.size();
  thread_local std::vector<double> terms;
  terms.resize(q * q);
  double ll = 0.0;
  for (const auto& s : data) {
    for (std::size_t a = 0; a < q; ++a) {
      const double intercept = alpha + sigma_u * rule.nodes[a];
      const double lw = std::log(rule.weights[a]);
      for (std::size_t b = 0; b < q; ++b) {
        const double half = 0.5 * (beta + tau * rule.nodes[b]);
        terms[a * q + b] = lw + std::log(rule.weights[b]) +
                           binomial_kernel(s.x1, s.n1, intercept + half) +
                           binomial_kernel(s.x0, s.n0, intercept - half);
      }
    }
    ll += s.log_const + log_sum_exp(terms);
  }
  return ll;
}

double logit_corrected(double x, double n) { return std::log((x + 0.5) / (n - x + 0.5)); }

// Free-parameter layout: [beta, (log tau)?, model-specific nuisance...].
struct Layout {
  GlmmModel model;
  std::size_t k;
  bool tau_free;
  double tau_fixed;
  bool sigma_free;  // UM_RS only
  double sigma_fixed;

  std::size_t size() const {
    std::size_t n = 1 + (tau_free ? 1 : 0);
    if (model == GlmmModel::UM_FS) n += k;
    if (model == GlmmModel::UM_RS) n += 1 + (sigma_free ? 1 : 0);
    return n;
  }
};

struct Unpacked {
  double beta = 0.0;
  double tau = 0.0;
  double alpha = 0.0;
  double sigma_u = 0.0;
  std::span<const double> intercepts;
};

Unpacked unpack(const Layout& lay, std::span<const double> p) {
  Unpacked u;
  std::size_t i = 0;
  u.beta = p[i++];
  u.tau = lay.tau_free ? std::exp(p[i++]) : lay.tau_fixed;
  if (lay.model == GlmmModel::UM_FS) {
    u.intercepts = p.subspan(i, lay.k);
  } else if (lay.model == GlmmModel::UM_RS) {
    u.alpha = p[i++];
    u.sigma_u = lay.sigma_free ? std::exp(p[i++]) : lay.sigma_fixed;
  }
  return u;
}

double negative_loglik(std::span<const StudyData> data, const Layout& lay,
                       const QuadratureRule& rule, std::span<const double> p) {
  const auto u = unpack(lay, p);
  double ll;
  switch (lay.model) {
    case GlmmModel::UM_FS:
      ll = loglik_um_fs(data, u.beta, u.tau, u.intercepts, rule);
      break;
    case GlmmModel::UM_RS:
      ll = loglik_um_rs(data, u.beta, u.tau, u.alpha, u.sigma_u, rule);
      break;
    default:
      ll = loglik_conditional(data, lay.model, u.beta, u.tau, rule);
      break;
  }
  return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
}

struct StartValues {
  double beta;
  double alpha;
  double sigma_u;
  std::vector<double> intercepts;
};

StartValues start_values(std::span<const StudyData> data) {
  double x1 = 0.0, n1 = 0.0, x0 = 0.0, n0 = 0.0;
  StartValues sv{};
  std::vector<double> mids;
  for (const auto& s : data) {
    x1 += s.x1;
    n1 += s.n1;
    x0 += s.x0;
    n0 += s.n0;
    mids.push_back(0.5 * (logit_corrected(s.x1, s.n1) + logit_corrected(s.x0, s.n0)));
  }
  sv.beta = logit_corrected(x1, n1) - logit_corrected(x0, n0);
  sv.intercepts = mids;
  double m = 0.0;
  for (double v : mids) m += v;
  m /= static_cast<double>(mids.size());
  double var = 0.0;
  for (double v : mids) var += (v - m) * (v - m);
  sv.alpha = m;
  sv.sigma_u = std::max(0.1, std::sqrt(var / std::max<double>(1.0, mids.size() - 1.0)));
  return sv;
}

std::vector<double> initial_point(const Layout& lay, const StartValues& sv, double tau_start) {
  std::vector<double> p{sv.beta};
  if (lay.tau_free) p.push_back(std::log(tau_start));
  if (lay.model == GlmmModel::UM_FS) p.insert(p.end(), sv.intercepts.begin(), sv.intercepts.end());
  if (lay.model == GlmmModel::UM_RS) {
    p.push_back(sv.alpha);
    if (lay.sigma_free) p.push_back(std::log(sv.sigma_u));
  }
  return p;
}

// Re-expresses a solution on `from` as a starting point on `to` (same model,
// possibly fewer free variance parameters).
std::vector<double> project(const Layout& from, const Layout& to, std::span<const double> p) {
  const auto u = unpack(from, p);
  std::vector<double> q{u.beta};
  if (to.tau_free) q.push_back(std::log(std::max(u.tau, 1e-8)));
  if (to.model == GlmmModel::UM_FS) q.insert(q.end(), u.intercepts.begin(), u.intercepts.end());
  if (to.model == GlmmModel::UM_RS) {
    q.push_back(u.alpha);
    if (to.sigma_free) q.push_back(std::log(std::max(u.sigma_u, 1e-8)));
  }
  return q;
}

struct Candidate {
  Layout layout;
  MinimizeResult result;
};

constexpr double kBoundary = 1e-2;  // variance SDs below this are checked against the boundary fit

}  // namespace

double nchg_log_pmf_log_psi(std::int64_t x1, std::int64_t t, std::int64_t n1, std::int64_t n0,
                            double log_psi) {
  if (n1 < 0 || n0 < 0 || t < 0 || t > n1 + n0) throw DomainError("nchg_log_pmf: bad margins");
  const std::int64_t lo = std::max<std::int64_t>(0, t - n0);
  const std::int64_t hi = std::min(t, n1);
  if (x1 < lo || x1 > hi) throw DomainError("nchg_log_pmf: x1 outside the support");
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t j = lo; j <= hi; ++j) {
    terms.push_back(log_choose(n1, j) + log_choose(n0, t - j) + static_cast<double>(j) * log_psi);
  }
  return terms[static_cast<std::size_t>(x1 - lo)] - log_sum_exp(terms);
}

double nchg_log_pmf(std::int64_t x1, std::int64_t t, std::int64_t n1, std::int64_t n0,
                    double psi) {
  if (!(psi > 0.0)) throw DomainError("nchg_log_pmf: psi must be positive");
  return nchg_log_pmf_log_psi(x1, t, n1, n0, std::log(psi));
}

double conditional_log_likelihood(std::span<const TwoByTwoTable> tables, GlmmModel model,
                                  double beta, double tau, int quad_order) {
  if (model != GlmmModel::CM_AL && model != GlmmModel::CM_EL) {
    throw DomainError("conditional_log_likelihood: model must be CM_AL or CM_EL");
  }
  const auto data = prepare(tables, model == GlmmModel::CM_EL);
  return loglik_conditional(data, model, beta, tau, gauss_hermite_rule(quad_order));
}

double um_fs_log_likelihood(std::span<const TwoByTwoTable> tables, double beta, double tau,
                            std::span<const double> intercepts, int quad_order) {
  if (intercepts.size() != tables.size()) throw DomainError("um_fs_log_likelihood: one intercept per study");
  const auto data = prepare(tables, false);
  return loglik_um_fs(data, beta, tau, intercepts, gauss_hermite_rule(quad_order));
}

double um_rs_log_likelihood(std::span<const TwoByTwoTable> tables, double beta, double tau,
                            double alpha, double sigma_u, int quad_order) {
  const auto data = prepare(tables, false);
  return loglik_um_rs(data, beta, tau, alpha, sigma_u, gauss_hermite_rule(quad_order));
}

GlmmFit fit_glmm(std::span<const TwoByTwoTable> tables, const GlmmSpec& spec) {
  if (tables.empty()) throw DomainError("fit_glmm: no studies");
  if (spec.quad_order < 1) throw DomainError("fit_glmm: quad_order must be >= 1");
  if (spec.fixed_tau && !(*spec.fixed_tau >= 0.0)) throw DomainError("fit_glmm: fixed tau must be >= 0");
  if (tables.size() < 2 && !spec.fixed_tau) {
    throw DomainError("fit_glmm: need at least 2 studies unless tau is fixed");
  }
  const bool is_cm = spec.model == GlmmModel::CM_AL || spec.model == GlmmModel::CM_EL;
  const auto data = prepare(tables, spec.model == GlmmModel::CM_EL);
  const auto rule = gauss_hermite_rule(spec.quad_order);
  const auto sv = start_values(data);

  if (is_cm) {
    bool any_info = false;
    for (const auto& s : data) any_info = any_info || s.it > 0;
    if (!any_info) throw DomainError("fit_glmm: no study has any events");
  }

  MinimizeOptions opt;
  opt.max_iter = spec.max_iter;
  opt.grad_tol = spec.tol;

  Layout full{spec.model, data.size(), !spec.fixed_tau, spec.fixed_tau.value_or(0.0),
              spec.model == GlmmModel::UM_RS, 0.0};
  auto objective_for = [&](const Layout& lay) {
    return Objective([&data, &rule, lay](std::span<const double> p) {
      return negative_loglik(data, lay, rule, p);
    });
  };

  // Primary start, then the documented fallbacks.
  std::vector<double> tau_starts{0.2};
  if (full.tau_free) tau_starts.insert(tau_starts.end(), {0.01, 0.5});
  std::optional<Candidate> best;
  int total_iter = 0;
  for (double ts : tau_starts) {
    auto r = minimize_bfgs(objective_for(full), initial_point(full, sv, ts), opt);
    total_iter += r.iterations;
    const bool better = !best || (r.converged && !best->result.converged) ||
                        (r.converged == best->result.converged && r.value < best->result.value);
    if (better) best = Candidate{full, std::move(r)};
    if (best->result.converged) break;
  }

  // Variance components that drifted towards zero: compare with the fit that
  // holds them exactly at zero.
  {
    const auto u = unpack(best->layout, best->result.x);
    Layout bound = best->layout;
    if (bound.tau_free && u.tau < kBoundary) {
      bound.tau_free = false;
      bound.tau_fixed = 0.0;
    }
    if (bound.sigma_free && u.sigma_u < kBoundary) {
      bound.sigma_free = false;
      bound.sigma_fixed = 0.0;
    }
    if (bound.size() != best->layout.size()) {
      auto r = minimize_bfgs(objective_for(bound), project(best->layout, bound, best->result.x), opt);
      total_iter += r.iterations;
      if (r.converged && r.value <= best->result.value + 1e-9) best = Candidate{bound, std::move(r)};
    }
  }

  GlmmFit fit;
  const auto u = unpack(best->layout, best->result.x);
  fit.beta_hat = u.beta;
  fit.tau_hat = u.tau;
  if (spec.model == GlmmModel::UM_RS) fit.sigma_u_hat = u.sigma_u;
  fit.loglik = -best->result.value;
  fit.iterations = total_iter;
  fit.converged = best->result.converged;
  if (!fit.converged) {
    fit.message = "optimizer exhausted max_iter";
    return fit;
  }

  const auto hess = numeric_hessian(objective_for(best->layout), best->result.x, 1e-4);
  const auto n = static_cast<Eigen::Index>(best->result.x.size());
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> h(
      hess.data(), n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) {
    fit.converged = false;
    fit.message = "observed information not positive definite";
    return fit;
  }
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
  fit.se_beta = std::sqrt(cov(0, 0));
  if (!std::isfinite(fit.se_beta) || !(fit.se_beta > 0.0)) {
    fit.converged = false;
    fit.message = "non-finite standard error";
  }
  return fit;
}

GlmmFit fit_glmm(const MetaDataset& data, const GlmmSpec& spec) {
  return fit_glmm(std::span<const TwoByTwoTable>(data.studies), spec);
}

std::pair<double, double> glmm_interval(const GlmmFit& fit, GlmmIntervalKind kind, double level,
                                        std::size_t k) {
  if (!fit.converged) throw DomainError("glmm_interval: fit did not converge");
  double q;
  if (kind == GlmmIntervalKind::Wald) {
    q = normal_critical(level);
  } else {
    if (k < 2) throw DomainError("glmm_interval: t interval needs k >= 2");
    q = t_critical(level, static_cast<double>(k) - 1.0);
  }
  return {fit.beta_hat - q * fit.se_beta, fit.beta_hat + q * fit.se_beta};
}

std::string to_string(GlmmModel m) {
  switch (m) {
    case GlmmModel::UM_FS: return "UM.FS";
    case GlmmModel::UM_RS: return "UM.RS";
    case GlmmModel::CM_AL: return "CM.AL";
    case GlmmModel::CM_EL: return "CM.EL";
  }
  return "?";
}

}  // namespace fewmeta
