#include "fewmeta/distributions.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "fewmeta/errors.hpp"

namespace fewmeta {

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("t_quantile: p must lie in (0,1)");
  if (!(df > 0.0)) throw DomainError("t_quantile: df must be positive");
  return boost::math::quantile(boost::math::students_t(df), p);
}

double normal_critical(double level) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0,1)");
  return normal_quantile(0.5 + 0.5 * level);
}

double t_critical(double level, double df) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0,1)");
  return t_quantile(0.5 + 0.5 * level, df);
}

}  // namespace fewmeta
