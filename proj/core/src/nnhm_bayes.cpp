#include "fewmeta/nnhm_bayes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fewmeta/distributions.hpp"
#include "fewmeta/errors.hpp"

namespace fewmeta {

HalfNormalPrior::HalfNormalPrior(double scale) : scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw DomainError("HalfNormalPrior: scale must be positive");
  }
}

double HalfNormalPrior::density(double tau) const {
  if (tau < 0.0) return 0.0;
  return std::sqrt(2.0 / std::numbers::pi) / scale_ *
         std::exp(-0.5 * (tau / scale_) * (tau / scale_));
}

double HalfNormalPrior::log_density(double tau) const {
  if (tau < 0.0) return -std::numeric_limits<double>::infinity();
  return 0.5 * std::log(2.0 / std::numbers::pi) - std::log(scale_) -
         0.5 * (tau / scale_) * (tau / scale_);
}

double HalfNormalPrior::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("HalfNormalPrior::quantile: p must lie in (0,1)");
  return scale_ * normal_quantile(0.5 * (1.0 + p));
}

double prior_quantile(const HalfNormalPrior& prior, double p) { return prior.quantile(p); }

namespace {

struct Conditional {
  double mean;  // mu_hat(tau)
  double sd;    // (sum w*)^(-1/2)
  double log_post;
};

Conditional conditional(std::span<const StudyEstimate> est, const HalfNormalPrior& prior,
                        double tau) {
  const double tau2 = tau * tau;
  double sw = 0.0;
  double swy = 0.0;
  double logdet = 0.0;
  for (const auto& e : est) {
    const double v = e.se * e.se + tau2;
    sw += 1.0 / v;
    swy += e.y / v;
    logdet += std::log(v);
  }
  const double mu = swy / sw;
  double rss = 0.0;
  for (const auto& e : est) rss += (e.y - mu) * (e.y - mu) / (e.se * e.se + tau2);
  const double lp = prior.log_density(tau) - 0.5 * logdet - 0.5 * std::log(sw) - 0.5 * rss;
  return {mu, 1.0 / std::sqrt(sw), lp};
}

struct GridState {
  std::vector<double> nodes;
  std::vector<Conditional> cond;
  std::vector<double> weights;
  double mean = 0.0;
  double sd = 0.0;
};

// Trapezoid masses over the node set, then mixture moments.
void update_weights(GridState& g) {
  const std::size_t n = g.nodes.size();
  double max_lp = -std::numeric_limits<double>::infinity();
  for (const auto& c : g.cond) max_lp = std::max(max_lp, c.log_post);
  g.weights.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double left = j > 0 ? g.nodes[j] - g.nodes[j - 1] : 0.0;
    const double right = j + 1 < n ? g.nodes[j + 1] - g.nodes[j] : 0.0;
    g.weights[j] = std::exp(g.cond[j].log_post - max_lp) * 0.5 * (left + right);
  }
  const double total = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
  double m = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    g.weights[j] /= total;
    m += g.weights[j] * g.cond[j].mean;
  }
  double v = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = g.cond[j].mean - m;
    v += g.weights[j] * (g.cond[j].sd * g.cond[j].sd + d * d);
  }
  g.mean = m;
  g.sd = std::sqrt(v);
}

}  // namespace

double tau_marginal_log_posterior(std::span<const StudyEstimate> estimates,
                                  const HalfNormalPrior& prior, double tau) {
  if (estimates.empty()) throw DomainError("tau_marginal_log_posterior: no studies");
  if (!(tau >= 0.0)) throw DomainError("tau_marginal_log_posterior: tau must be nonnegative");
  return conditional(estimates, prior, tau).log_post;
}

MarginalPosterior marginal_posterior(std::span<const StudyEstimate> estimates,
                                     const HalfNormalPrior& prior, const GridControl& control) {
  if (estimates.empty()) throw DomainError("marginal_posterior: no studies");
  if (control.initial_nodes < 3 || control.max_nodes < control.initial_nodes) {
    throw DomainError("marginal_posterior: invalid grid control");
  }
  const double upper = prior.quantile(control.support_mass);

  GridState g;
  const int n0 = control.initial_nodes;
  g.nodes.reserve(static_cast<std::size_t>(n0));
  for (int j = 0; j < n0; ++j) {
    const double p = control.support_mass * j / (n0 - 1);
    g.nodes.push_back(j == 0 ? 0.0 : j == n0 - 1 ? upper : prior.quantile(p));
  }
  for (double t : g.nodes) g.cond.push_back(conditional(estimates, prior, t));
  update_weights(g);

  while (true) {
    const std::size_t n = g.nodes.size();
    if (n >= static_cast<std::size_t>(control.max_nodes)) {
      throw ConvergenceError("marginal_posterior: tau grid reached " + std::to_string(n) +
                             " nodes without meeting tolerance");
    }
    // Score each interval by the variation across it of the posterior density
    // times the first two conditional moments of mu (a trapezoid error proxy);
    // bisect the top quarter.
    std::vector<double> dens(n);
    {
      double max_lp = -std::numeric_limits<double>::infinity();
      for (const auto& c : g.cond) max_lp = std::max(max_lp, c.log_post);
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        dens[j] = std::exp(g.cond[j].log_post - max_lp);
        if (j > 0) total += 0.5 * (dens[j] + dens[j - 1]) * (g.nodes[j] - g.nodes[j - 1]);
      }
      for (double& d : dens) d /= total;
    }
    auto moments = [&](std::size_t j) {
      const double d = (g.cond[j].mean - g.mean) / g.sd;
      const double r = g.cond[j].sd / g.sd;
      return std::array<double, 3>{dens[j], dens[j] * d, dens[j] * (d * d + r * r)};
    };
    std::vector<double> score(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const auto a = moments(j);
      const auto b = moments(j + 1);
      const double h = g.nodes[j + 1] - g.nodes[j];
      score[j] = h * (std::abs(b[0] - a[0]) + std::abs(b[1] - a[1]) + std::abs(b[2] - a[2]));
    }
    std::vector<std::size_t> order(n - 1);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t budget = static_cast<std::size_t>(control.max_nodes) - n;
    const std::size_t n_split = std::min({budget, std::max<std::size_t>(1, (n - 1) / 4), n - 1});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_split),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        return score[a] > score[b] || (score[a] == score[b] && a < b);
                      });
    std::vector<char> split(n - 1, 0);
    for (std::size_t i = 0; i < n_split; ++i) split[order[i]] = 1;

    GridState next;
    next.nodes.reserve(n + n_split);
    next.cond.reserve(n + n_split);
    for (std::size_t j = 0; j < n; ++j) {
      next.nodes.push_back(g.nodes[j]);
      next.cond.push_back(g.cond[j]);
      if (j + 1 < n && split[j]) {
        const double mid = 0.5 * (g.nodes[j] + g.nodes[j + 1]);
        next.nodes.push_back(mid);
        next.cond.push_back(conditional(estimates, prior, mid));
      }
    }
    update_weights(next);
    const double scale = std::max(next.sd, std::numeric_limits<double>::min());
    const bool done = std::abs(next.mean - g.mean) <= control.tolerance * scale &&
                      std::abs(next.sd - g.sd) <= control.tolerance * scale;
    g = std::move(next);
    if (done) break;
  }

  std::vector<double> means(g.nodes.size());
  std::vector<double> sds(g.nodes.size());
  for (std::size_t j = 0; j < g.nodes.size(); ++j) {
    means[j] = g.cond[j].mean;
    sds[j] = g.cond[j].sd;
  }
  TauGrid grid{g.nodes, g.weights, upper};
  return {std::move(grid), NormalMixture(std::move(means), std::move(sds), g.weights)};
}

PosteriorSummary summarize(const MarginalPosterior& posterior, double level) {
  PosteriorSummary s;
  const auto& mix = posterior.mu;
  s.mean = mix.mean();
  s.sd = std::sqrt(mix.variance());
  s.median = mix.quantile(0.5);
  s.mode = mix.mode();
  const auto hpd = hpd_interval(mix, level);
  s.hpd_lower = hpd.lower;
  s.hpd_upper = hpd.upper;
  s.level = level;
  s.grid = posterior.grid;

  // tau median from the discrete grid masses, interpolated within the crossing cell.
  const auto& nodes = posterior.grid.nodes;
  const auto& w = posterior.grid.weights;
  double cum = 0.0;
  s.tau_median = nodes.back();
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (cum + w[j] >= 0.5) {
      const double frac = w[j] > 0.0 ? (0.5 - cum) / w[j] : 0.0;
      const double prev = j > 0 ? nodes[j - 1] : nodes[0];
      s.tau_median = prev + frac * (nodes[j] - prev);
      break;
    }
    cum += w[j];
  }
  return s;
}

PosteriorSummary mu_posterior(std::span<const StudyEstimate> estimates,
                              const HalfNormalPrior& prior, double level,
                              const GridControl& control) {
  return summarize(marginal_posterior(estimates, prior, control), level);
}

}  // namespace fewmeta
