#pragma once

#include <span>
#include <vector>

namespace fewmeta {

/// Finite mixture of univariate normals. Weights are normalized on construction.
class NormalMixture {
 public:
  NormalMixture(std::vector<double> means, std::vector<double> sds, std::vector<double> weights);

  double pdf(double x) const;
  double cdf(double x) const;
  /// Inverse CDF by bisection, p in (0,1).
  double quantile(double p) const;
  double mean() const;
  double variance() const;
  /// Location of the highest density found by a grid scan refined with golden section.
  double mode() const;

  /// [min(mean_j - nsd*sd_j), max(mean_j + nsd*sd_j)].
  std::pair<double, double> support(double nsd) const;

  std::span<const double> means() const noexcept { return means_; }
  std::span<const double> sds() const noexcept { return sds_; }
  std::span<const double> weights() const noexcept { return weights_; }

 private:
  std::vector<double> means_;
  std::vector<double> sds_;
  std::vector<double> weights_;
};

struct HpdInterval {
  double lower = 0.0;
  double upper = 0.0;
  double density_cut = 0.0;
  double mass = 0.0;
};

/// Shortest interval holding `level` probability mass. The density cut is
/// found by bisection; throws ShapeError when the superlevel set at the
/// solution cut is not connected.
HpdInterval hpd_interval(const NormalMixture& mixture, double level, double mass_tol = 1e-8);

/// Equal-tailed interval at the same level, for comparison.
std::pair<double, double> equal_tailed_interval(const NormalMixture& mixture, double level);

}  // namespace fewmeta
