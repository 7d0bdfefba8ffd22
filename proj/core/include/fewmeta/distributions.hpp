#pragma once

// Scalar distribution helpers shared by the interval constructions.

namespace fewmeta {

double normal_pdf(double x);
double normal_cdf(double x);
/// Standard normal quantile, p in (0,1).
double normal_quantile(double p);
/// Student-t quantile with `df` degrees of freedom, p in (0,1), df > 0.
double t_quantile(double p, double df);

/// z_{1-(1-level)/2}: the two-sided normal critical value for a central interval.
double normal_critical(double level);
double t_critical(double level, double df);

}  // namespace fewmeta
