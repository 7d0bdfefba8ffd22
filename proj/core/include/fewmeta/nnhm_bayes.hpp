#pragma once

// Bayesian normal-normal hierarchical model with a half-normal prior on tau
// and an improper uniform prior on mu. tau is marginalized numerically on an
// adaptive grid; conditionally on tau the posterior of mu is normal, so the
// marginal posterior of mu is a finite normal mixture.

#include <span>
#include <vector>

#include "fewmeta/normal_mixture.hpp"
#include "fewmeta/tables.hpp"

namespace fewmeta {

class HalfNormalPrior {
 public:
  explicit HalfNormalPrior(double scale);

  double scale() const noexcept { return scale_; }
  double density(double tau) const;
  double log_density(double tau) const;
  double quantile(double p) const;

  static HalfNormalPrior hn05() { return HalfNormalPrior(0.5); }
  static HalfNormalPrior hn10() { return HalfNormalPrior(1.0); }

 private:
  double scale_;
};

double prior_quantile(const HalfNormalPrior& prior, double p);

struct TauGrid {
  std::vector<double> nodes;    // strictly increasing, nodes.front() == 0
  std::vector<double> weights;  // posterior masses, sum to 1
  double upper = 0.0;
};

struct GridControl {
  double tolerance = 1e-6;           // relative (to posterior SD) change in mean and SD of mu
  int initial_nodes = 64;
  int max_nodes = 4096;
  double support_mass = 1.0 - 1e-6;  // tau support ends at this prior quantile
};

/// Unnormalized log p(tau | y) with mu integrated out under a flat prior.
double tau_marginal_log_posterior(std::span<const StudyEstimate> estimates,
                                  const HalfNormalPrior& prior, double tau);

struct MarginalPosterior {
  TauGrid grid;
  NormalMixture mu;  // one component per grid node
};

/// Builds the refined tau grid and the mixture posterior of mu. Throws
/// ConvergenceError when the node cap is reached before tolerance.
MarginalPosterior marginal_posterior(std::span<const StudyEstimate> estimates,
                                     const HalfNormalPrior& prior,
                                     const GridControl& control = {});

struct PosteriorSummary {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double mode = 0.0;
  double hpd_lower = 0.0;
  double hpd_upper = 0.0;
  double level = 0.95;
  double tau_median = 0.0;
  TauGrid grid;
};

PosteriorSummary summarize(const MarginalPosterior& posterior, double level);

PosteriorSummary mu_posterior(std::span<const StudyEstimate> estimates,
                              const HalfNormalPrior& prior, double level = 0.95,
                              const GridControl& control = {});

}  // namespace fewmeta
