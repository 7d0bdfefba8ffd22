#include "fewmeta/normal_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fewmeta/distributions.hpp"
#include "fewmeta/errors.hpp"
#include "fewmeta/optimize.hpp"

namespace fewmeta {

NormalMixture::NormalMixture(std::vector<double> means, std::vector<double> sds,
                             std::vector<double> weights)
    : means_(std::move(means)), sds_(std::move(sds)), weights_(std::move(weights)) {
  if (means_.empty() || means_.size() != sds_.size() || means_.size() != weights_.size()) {
    throw DomainError("NormalMixture: component arrays must be nonempty and equally sized");
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("NormalMixture: weights must have positive sum");
  for (std::size_t j = 0; j < sds_.size(); ++j) {
    if (!(sds_[j] > 0.0) || weights_[j] < 0.0) {
      throw DomainError("NormalMixture: sds must be positive and weights nonnegative");
    }
    weights_[j] /= total;
  }
}

double NormalMixture::pdf(double x) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < means_.size(); ++j) {
    acc += weights_[j] * normal_pdf((x - means_[j]) / sds_[j]) / sds_[j];
  }
  return acc;
}

double NormalMixture::cdf(double x) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < means_.size(); ++j) {
    acc += weights_[j] * normal_cdf((x - means_[j]) / sds_[j]);
  }
  return acc;
}

double NormalMixture::mean() const {
  double acc = 0.0;
  for (std::size_t j = 0; j < means_.size(); ++j) acc += weights_[j] * means_[j];
  return acc;
}

double NormalMixture::variance() const {
  const double m = mean();
  double acc = 0.0;
  for (std::size_t j = 0; j < means_.size(); ++j) {
    acc += weights_[j] * (sds_[j] * sds_[j] + (means_[j] - m) * (means_[j] - m));
  }
  return acc;
}

std::pair<double, double> NormalMixture::support(double nsd) const {
  double lo = means_[0] - nsd * sds_[0];
  double hi = means_[0] + nsd * sds_[0];
  for (std::size_t j = 1; j < means_.size(); ++j) {
    lo = std::min(lo, means_[j] - nsd * sds_[j]);
    hi = std::max(hi, means_[j] + nsd * sds_[j]);
  }
  return {lo, hi};
}

double NormalMixture::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("NormalMixture::quantile: p must lie in (0,1)");
  auto [lo, hi] = support(40.0);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo) + std::abs(hi));
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double NormalMixture::mode() const {
  constexpr int kScan = 512;
  const auto [lo, hi] = support(6.0);
  const double step = (hi - lo) / kScan;
  int best = 0;
  double best_val = -1.0;
  for (int i = 0; i <= kScan; ++i) {
    const double v = pdf(lo + step * i);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double a = lo + step * std::max(0, best - 1);
  const double b = lo + step * std::min(kScan, best + 1);
  const double tol = 1e-12 * std::max(1.0, std::abs(a) + std::abs(b));
  return golden_section_maximize([this](double x) { return pdf(x); }, a, b, tol, 200).x;
}

namespace {

/// Crossing of pdf == cut between `inside` (pdf >= cut) and `outside` (pdf < cut).
double refine_crossing(const NormalMixture& m, double cut, double outside, double inside) {
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (outside + inside);
    if (mid == outside || mid == inside) break;
    if (m.pdf(mid) >= cut) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  return 0.5 * (outside + inside);
}

}  // namespace

HpdInterval hpd_interval(const NormalMixture& mixture, double level, double mass_tol) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("hpd_interval: level must lie in (0,1)");
  constexpr int kGrid = 512;
  const auto [lo, hi] = mixture.support(12.0);
  const double step = (hi - lo) / kGrid;
  std::vector<double> xs(kGrid + 1);
  std::vector<double> fs(kGrid + 1);
  double fmax = 0.0;
  for (int i = 0; i <= kGrid; ++i) {
    xs[i] = lo + step * i;
    fs[i] = mixture.pdf(xs[i]);
    fmax = std::max(fmax, fs[i]);
  }
  const double peak = std::max(fmax, mixture.pdf(mixture.mode()));

  struct Cut {
    double lower, upper, mass, cut;
    int first, last;
  };
  auto evaluate = [&](double c) -> Cut {
    int first = -1;
    int last = -1;
    for (int i = 0; i <= kGrid; ++i) {
      if (fs[i] >= c) {
        if (first < 0) first = i;
        last = i;
      }
    }
    if (first < 0) {
      // Cut lies above every grid node: the superlevel set sits inside one grid cell
      // around the mode.
      const double m = mixture.mode();
      const double a = refine_crossing(mixture, c, m - step, m);
      const double b = refine_crossing(mixture, c, m + step, m);
      return {a, b, mixture.cdf(b) - mixture.cdf(a), c, -1, -1};
    }
    const double a = first == 0 ? lo : refine_crossing(mixture, c, xs[first - 1], xs[first]);
    const double b = last == kGrid ? hi : refine_crossing(mixture, c, xs[last + 1], xs[last]);
    return {a, b, mixture.cdf(b) - mixture.cdf(a), c, first, last};
  };

  double c_lo = 0.0;   // mass(c_lo) >= level
  double c_hi = peak;  // mass(c_hi) <= level
  Cut best = evaluate(0.5 * (c_lo + c_hi));
  for (int it = 0; it < 200; ++it) {
    const double c = 0.5 * (c_lo + c_hi);
    best = evaluate(c);
    if (std::abs(best.mass - level) <= mass_tol) break;
    if (best.mass > level) {
      c_lo = c;
    } else {
      c_hi = c;
    }
    if (c_hi - c_lo <= 1e-15 * peak) break;
  }
  if (best.first >= 0) {
    for (int i = best.first; i <= best.last; ++i) {
      if (fs[i] < best.cut) {
        throw ShapeError("hpd_interval: superlevel set is not an interval (multimodal density)");
      }
    }
  }
  return {best.lower, best.upper, best.cut, best.mass};
}

std::pair<double, double> equal_tailed_interval(const NormalMixture& mixture, double level) {
  const double tail = 0.5 * (1.0 - level);
  return {mixture.quantile(tail), mixture.quantile(1.0 - tail)};
}

}  // namespace fewmeta
