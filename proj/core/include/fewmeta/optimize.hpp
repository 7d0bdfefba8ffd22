#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fewmeta {

struct ScalarSearchResult {
  double x = 0.0;
  double value = 0.0;  // objective at x (or residual for root finding)
  int iterations = 0;
  bool converged = false;
};

/// Golden-section search for the maximum of `f` on [lo, hi]. Stops once the
/// bracket is narrower than `abs_tol`; the endpoints are compared against the
/// interior optimum so boundary maxima are returned exactly.
ScalarSearchResult golden_section_maximize(const std::function<double(double)>& f, double lo,
                                           double hi, double abs_tol, int max_iter);

/// Root of `f` on a sign-changing bracket [lo, hi] (TOMS 748).
ScalarSearchResult find_root(const std::function<double(double)>& f, double lo, double hi,
                             double abs_tol, int max_iter);

using Objective = std::function<double(std::span<const double>)>;

struct MinimizeOptions {
  int max_iter = 200;
  double grad_tol = 1e-6;
  double rel_step = 1e-5;  // central-difference step, relative to max(1, |x_i|)
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Central-difference gradient.
std::vector<double> numeric_gradient(const Objective& f, std::span<const double> x,
                                     double rel_step);

/// Central-difference Hessian (row-major, n*n).
std::vector<double> numeric_hessian(const Objective& f, std::span<const double> x,
                                    double rel_step);

/// Quasi-Newton (BFGS) minimization with numeric gradients and Armijo backtracking.
MinimizeResult minimize_bfgs(const Objective& f, std::vector<double> x0,
                             const MinimizeOptions& options = {});

}  // namespace fewmeta
