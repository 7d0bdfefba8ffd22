#include "fewmeta/nnhm_freq.hpp"

#include <algorithm>
#include <cmath>

#include "fewmeta/distributions.hpp"
#include "fewmeta/errors.hpp"
#include "fewmeta/optimize.hpp"

namespace fewmeta {

namespace {

void require_k(std::span<const StudyEstimate> est, std::size_t min_k, const char* who) {
  if (est.size() < min_k) {
    throw DomainError(std::string(who) + ": need at least " + std::to_string(min_k) +
                      " studies");
  }
}

double variance(const StudyEstimate& e) { return e.se * e.se; }

HeterogeneityEstimate make_estimate(double tau2, TauMethod m, int iterations, bool converged,
                                    double tol) {
  return {std::sqrt(std::max(0.0, tau2)), m, iterations, converged, tol};
}

HeterogeneityEstimate estimate_dl(std::span<const StudyEstimate> est, const TauControl& control) {
  double sw = 0.0;
  double sw2 = 0.0;
  for (const auto& e : est) {
    const double w = 1.0 / variance(e);
    sw += w;
    sw2 += w * w;
  }
  const auto [q, fe] = cochran_q(est);
  const double k = static_cast<double>(est.size());
  const double tau2 = (q - (k - 1.0)) / (sw - sw2 / sw);
  return make_estimate(tau2, TauMethod::DL, 0, true, control.tolerance);
}

HeterogeneityEstimate estimate_eb(std::span<const StudyEstimate> est, const TauControl& control) {
  const double target = static_cast<double>(est.size()) - 1.0;
  auto excess = [&](double tau2) { return generalized_q(est, tau2) - target; };
  if (excess(0.0) <= 0.0) {
    return make_estimate(0.0, TauMethod::EB, 0, true, control.tolerance);
  }
  // generalized Q is strictly decreasing in tau^2; grow the bracket until it
  // drops below k-1.
  double mean = 0.0;
  for (const auto& e : est) mean += e.y;
  mean /= static_cast<double>(est.size());
  double hi = 1.0;
  for (const auto& e : est) hi = std::max(hi, (e.y - mean) * (e.y - mean));
  int grow = 0;
  while (excess(hi) > 0.0) {
    hi *= 2.0;
    if (++grow > 200) return make_estimate(hi, TauMethod::EB, grow, false, control.tolerance);
  }
  const auto root = find_root(excess, 0.0, hi, control.tolerance, control.max_iter);
  return make_estimate(root.x, TauMethod::EB, root.iterations, root.converged,
                       control.tolerance);
}

// d/d(tau^2) of the (restricted) log-likelihood.
double likelihood_score(std::span<const StudyEstimate> est, double tau2, bool restricted) {
  double sw = 0.0;
  double sw2 = 0.0;
  double swy = 0.0;
  for (const auto& e : est) {
    const double w = 1.0 / (variance(e) + tau2);
    sw += w;
    sw2 += w * w;
    swy += w * e.y;
  }
  const double mu = swy / sw;
  double s = 0.0;
  for (const auto& e : est) {
    const double w = 1.0 / (variance(e) + tau2);
    s += -0.5 * w + 0.5 * w * w * (e.y - mu) * (e.y - mu);
  }
  if (restricted) s += 0.5 * sw2 / sw;
  return s;
}

HeterogeneityEstimate estimate_likelihood(std::span<const StudyEstimate> est, bool restricted,
                                          const TauControl& control) {
  const TauMethod method = restricted ? TauMethod::REML : TauMethod::ML;
  double mean = 0.0;
  for (const auto& e : est) mean += e.y;
  mean /= static_cast<double>(est.size());
  double spread = 0.0;
  for (const auto& e : est) spread = std::max(spread, std::abs(e.y - mean));
  if (spread == 0.0) return make_estimate(0.0, method, 0, true, control.tolerance);

  // Coarse scan on tau, then golden section in tau^2 around the best node.
  constexpr int kScan = 200;
  const double upper = 10.0 * spread;
  auto loglik = [&](double tau2) { return nnhm_log_likelihood(est, tau2, restricted); };
  int best = 0;
  double best_val = loglik(0.0);
  for (int j = 1; j <= kScan; ++j) {
    const double t = upper * j / kScan;
    const double v = loglik(t * t);
    if (v > best_val) {
      best_val = v;
      best = j;
    }
  }
  const double lo_tau = upper * std::max(0, best - 1) / kScan;
  const double hi_tau = upper * std::min(kScan, best + 1) / kScan;
  const double lo2 = lo_tau * lo_tau;
  const double hi2 = hi_tau * hi_tau;
  const auto r = golden_section_maximize(loglik, lo2, hi2, control.tolerance, control.max_iter);

  // The likelihood is flat to ~sqrt(eps) near its maximum; polish on the score.
  auto score = [&](double tau2) { return likelihood_score(est, tau2, restricted); };
  const double s_lo = score(lo2);
  const double s_hi = score(hi2);
  if (lo2 == 0.0 && s_lo <= 0.0) {
    return make_estimate(0.0, method, r.iterations, true, control.tolerance);
  }
  if (s_lo > 0.0 && s_hi < 0.0) {
    const auto root = find_root(score, lo2, hi2, 0.0, control.max_iter);
    if (root.converged) {
      return make_estimate(root.x, method, r.iterations + root.iterations, true,
                           control.tolerance);
    }
  }
  return make_estimate(r.x, method, r.iterations, r.converged, control.tolerance);
}

}  // namespace

CochranQ cochran_q(std::span<const StudyEstimate> estimates) {
  require_k(estimates, 2, "cochran_q");
  double sw = 0.0;
  double swy = 0.0;
  for (const auto& e : estimates) {
    const double w = 1.0 / variance(e);
    sw += w;
    swy += w * e.y;
  }
  const double fe = swy / sw;
  double q = 0.0;
  for (const auto& e : estimates) q += (e.y - fe) * (e.y - fe) / variance(e);
  return {q, fe};
}

double generalized_q(std::span<const StudyEstimate> estimates, double tau2) {
  const auto mean = pool(estimates, std::sqrt(std::max(0.0, tau2)));
  double q = 0.0;
  for (const auto& e : estimates) q += (e.y - mean.mu_hat) * (e.y - mean.mu_hat) / (variance(e) + tau2);
  return q;
}

double nnhm_log_likelihood(std::span<const StudyEstimate> estimates, double tau2,
                           bool restricted) {
  double sw = 0.0;
  double swy = 0.0;
  double logdet = 0.0;
  for (const auto& e : estimates) {
    const double v = variance(e) + tau2;
    sw += 1.0 / v;
    swy += e.y / v;
    logdet += std::log(v);
  }
  const double mu = swy / sw;
  double rss = 0.0;
  for (const auto& e : estimates) rss += (e.y - mu) * (e.y - mu) / (variance(e) + tau2);
  double ll = -0.5 * (logdet + rss);
  if (restricted) ll -= 0.5 * std::log(sw);
  return ll;
}

HeterogeneityEstimate estimate_tau(std::span<const StudyEstimate> estimates, TauMethod method,
                                   const TauControl& control) {
  require_k(estimates, 2, "estimate_tau");
  switch (method) {
    case TauMethod::DL:
      return estimate_dl(estimates, control);
    case TauMethod::EB:
      return estimate_eb(estimates, control);
    case TauMethod::ML:
      return estimate_likelihood(estimates, false, control);
    case TauMethod::REML:
      return estimate_likelihood(estimates, true, control);
  }
  throw DomainError("estimate_tau: unknown method");
}

PooledMean pool(std::span<const StudyEstimate> estimates, double tau) {
  if (estimates.empty()) throw DomainError("pool: no studies");
  if (!(tau >= 0.0)) throw DomainError("pool: tau must be nonnegative");
  const double tau2 = tau * tau;
  double sw = 0.0;
  double swy = 0.0;
  for (const auto& e : estimates) {
    const double w = 1.0 / (variance(e) + tau2);
    sw += w;
    swy += w * e.y;
  }
  return {swy / sw, 1.0 / std::sqrt(sw)};
}

PooledResult interval_wald(double mu_hat, double se_mu, double level, double tau_used) {
  const double half = normal_critical(level) * se_mu;
  PooledResult r;
  r.mu_hat = mu_hat;
  r.se_mu = se_mu;
  r.lower = mu_hat - half;
  r.upper = mu_hat + half;
  r.level = level;
  r.interval_kind = IntervalKind::Wald;
  r.tau_used = tau_used;
  return r;
}

double hksj_scale(std::span<const StudyEstimate> estimates, double tau) {
  require_k(estimates, 2, "hksj_scale");
  const double tau2 = tau * tau;
  const auto mean = pool(estimates, tau);
  double ss = 0.0;
  for (const auto& e : estimates) {
    ss += (e.y - mean.mu_hat) * (e.y - mean.mu_hat) / (variance(e) + tau2);
  }
  return ss / (static_cast<double>(estimates.size()) - 1.0);
}

PooledResult interval_hksj(std::span<const StudyEstimate> estimates, double tau, double level,
                           bool modified) {
  require_k(estimates, 2, "interval_hksj");
  const auto mean = pool(estimates, tau);
  double q = hksj_scale(estimates, tau);
  if (modified) q = std::max(q, 1.0);
  const int df = static_cast<int>(estimates.size()) - 1;
  const double se = std::sqrt(q) * mean.se_mu;
  const double half = t_critical(level, df) * se;
  PooledResult r;
  r.mu_hat = mean.mu_hat;
  r.se_mu = se;
  r.lower = mean.mu_hat - half;
  r.upper = mean.mu_hat + half;
  r.level = level;
  r.interval_kind = modified ? IntervalKind::Mhksj : IntervalKind::Hksj;
  r.tau_used = tau;
  r.df = df;
  return r;
}

PooledResult interval_t(std::span<const StudyEstimate> estimates, double tau, double level) {
  require_k(estimates, 2, "interval_t");
  const auto mean = pool(estimates, tau);
  const int df = static_cast<int>(estimates.size()) - 1;
  const double half = t_critical(level, df) * mean.se_mu;
  PooledResult r;
  r.mu_hat = mean.mu_hat;
  r.se_mu = mean.se_mu;
  r.lower = mean.mu_hat - half;
  r.upper = mean.mu_hat + half;
  r.level = level;
  r.interval_kind = IntervalKind::T;
  r.tau_used = tau;
  r.df = df;
  return r;
}

double typical_within_variance(std::span<const StudyEstimate> estimates) {
  double sw = 0.0;
  double sw2 = 0.0;
  for (const auto& e : estimates) {
    const double w = 1.0 / variance(e);
    sw += w;
    sw2 += w * w;
  }
  const double denom = sw * sw - sw2;
  if (estimates.size() < 2 || !(denom > 0.0)) {
    throw DomainError("typical_within_variance: need at least 2 studies");
  }
  return (static_cast<double>(estimates.size()) - 1.0) * sw / denom;
}

double i_squared(std::span<const StudyEstimate> estimates, double tau) {
  const double s2 = typical_within_variance(estimates);
  const double tau2 = tau * tau;
  return tau2 / (s2 + tau2);
}

std::string to_string(TauMethod m) {
  switch (m) {
    case TauMethod::DL: return "DL";
    case TauMethod::ML: return "ML";
    case TauMethod::REML: return "REML";
    case TauMethod::EB: return "EB";
  }
  return "?";
}

std::string to_string(IntervalKind k) {
  switch (k) {
    case IntervalKind::Wald: return "WALD";
    case IntervalKind::Hksj: return "HKSJ";
    case IntervalKind::Mhksj: return "MHKSJ";
    case IntervalKind::T: return "T";
    case IntervalKind::Hpd: return "HPD";
  }
  return "?";
}

}  // namespace fewmeta
