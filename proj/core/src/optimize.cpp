#include "fewmeta/optimize.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <limits>

#include "fewmeta/errors.hpp"

namespace fewmeta {

ScalarSearchResult golden_section_maximize(const std::function<double(double)>& f, double lo,
                                           double hi, double abs_tol, int max_iter) {
  if (!(hi >= lo)) throw DomainError("golden_section_maximize: empty bracket");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  while (b - a > abs_tol && it < max_iter) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++it;
  }
  ScalarSearchResult r;
  r.iterations = it;
  r.converged = b - a <= abs_tol;
  r.x = fc >= fd ? c : d;
  r.value = std::max(fc, fd);
  for (double edge : {lo, hi}) {
    const double fe = f(edge);
    if (fe >= r.value) {
      r.x = edge;
      r.value = fe;
    }
  }
  return r;
}

ScalarSearchResult find_root(const std::function<double(double)>& f, double lo, double hi,
                             double abs_tol, int max_iter) {
  const double flo = f(lo);
  const double fhi = f(hi);
  ScalarSearchResult r;
  if (flo == 0.0) return {lo, 0.0, 0, true};
  if (fhi == 0.0) return {hi, 0.0, 0, true};
  if ((flo > 0.0) == (fhi > 0.0)) throw DomainError("find_root: bracket does not change sign");
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  auto stop = [abs_tol](double x0, double x1) {
    return std::abs(x1 - x0) <= abs_tol ||
           std::abs(x1 - x0) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                    std::max(std::abs(x0), std::abs(x1));
  };
  auto [x0, x1] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, iters);
  r.iterations = static_cast<int>(iters);
  r.converged = stop(x0, x1);
  r.x = 0.5 * (x0 + x1);
  r.value = f(r.x);
  return r;
}

std::vector<double> numeric_gradient(const Objective& f, std::span<const double> x,
                                     double rel_step) {
  std::vector<double> g(x.size());
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

std::vector<double> numeric_hessian(const Objective& f, std::span<const double> x,
                                    double rel_step) {
  const std::size_t n = x.size();
  std::vector<double> hess(n * n);
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = rel_step * std::max(1.0, std::abs(x[i]));
  const double f0 = f(xp);
  for (std::size_t i = 0; i < n; ++i) {
    xp[i] = x[i] + h[i];
    const double fp = f(xp);
    xp[i] = x[i] - h[i];
    const double fm = f(xp);
    xp[i] = x[i];
    hess[i * n + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      auto eval = [&](double si, double sj) {
        xp[i] = x[i] + si * h[i];
        xp[j] = x[j] + sj * h[j];
        const double v = f(xp);
        xp[i] = x[i];
        xp[j] = x[j];
        return v;
      };
      const double v = (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * h[i] * h[j]);
      hess[i * n + j] = v;
      hess[j * n + i] = v;
    }
  }
  return hess;
}

namespace {

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

}  // namespace

MinimizeResult minimize_bfgs(const Objective& f, std::vector<double> x0,
                             const MinimizeOptions& options) {
  const std::size_t n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);
  res.value = f(res.x);
  if (!std::isfinite(res.value)) return res;

  // Inverse Hessian approximation, row-major.
  std::vector<double> inv_h(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) inv_h[i * n + i] = 1.0;

  auto g = numeric_gradient(f, res.x, options.rel_step);
  std::vector<double> dir(n), x_new(n), s(n), yv(n), hy(n);
  bool first_step = true;

  for (int it = 0; it < options.max_iter; ++it) {
    res.iterations = it;
    if (max_abs(g) < options.grad_tol) {
      res.converged = true;
      return res;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc -= inv_h[i * n + j] * g[j];
      dir[i] = acc;
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += dir[i] * g[i];
    if (!(slope < 0.0)) {
      // Not a descent direction; fall back to steepest descent.
      std::fill(inv_h.begin(), inv_h.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        inv_h[i * n + i] = 1.0;
        dir[i] = -g[i];
      }
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) slope -= g[i] * g[i];
    }

    double step = 1.0;
    if (first_step) {
      const double dn = std::sqrt(-slope);
      if (dn > 1.0) step = 1.0 / dn;
    }
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * dir[i];
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No further decrease is achievable at this resolution.
      res.converged = max_abs(g) < 1e3 * options.grad_tol;
      return res;
    }

    auto g_new = numeric_gradient(f, x_new, options.rel_step);
    double sy = 0.0;
    double yy = 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - res.x[i];
      yv[i] = g_new[i] - g[i];
      sy += s[i] * yv[i];
      yy += yv[i] * yv[i];
      ss += s[i] * s[i];
    }
    // Curvature condition; skip the update otherwise.
    if (sy > 1e-12 * std::sqrt(yy * ss)) {
      if (first_step) {
        const double scale = sy / yy;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) inv_h[i * n + j] = i == j ? scale : 0.0;
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += inv_h[i * n + j] * yv[j];
        hy[i] = acc;
      }
      double yhy = 0.0;
      for (std::size_t i = 0; i < n; ++i) yhy += yv[i] * hy[i];
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          inv_h[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
        }
      }
      first_step = false;
    }
    res.x = x_new;
    res.value = f_new;
    g = std::move(g_new);
  }
  res.iterations = options.max_iter;
  res.converged = max_abs(g) < options.grad_tol;
  return res;
}

}  // namespace fewmeta
