#pragma once

// Small numeric helpers shared by the library sources. Not installed.

#include <cmath>
#include <limits>
#include <tuple>
#include <utility>

namespace snfit::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double inv_logit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Root of a monotone function on [lo, hi] (f(lo), f(hi) of opposite sign)
/// by Newton steps that fall back to bisection when they leave the bracket.
/// `fdf(x)` returns {f(x), f'(x)}. Stops when the bracket or the step is
/// below `xtol`.
template <class FDF>
double safe_newton(FDF&& fdf, double lo, double hi, double xtol, int max_iter = 200) {
  auto [flo, dlo] = fdf(lo);
  auto [fhi, dhi] = fdf(hi);
  (void)dlo;
  (void)dhi;
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  // Orient so that f(lo) < 0.
  if (flo > 0.0) std::swap(lo, hi);
  double x = 0.5 * (lo + hi);
  double dx_old = std::abs(hi - lo);
  double dx = dx_old;
  auto [f, df] = fdf(x);
  for (int it = 0; it < max_iter; ++it) {
    const bool out = ((x - hi) * df - f) * ((x - lo) * df - f) > 0.0;
    if (out || !std::isfinite(df) || df == 0.0 || std::abs(2.0 * f) > std::abs(dx_old * df)) {
      dx_old = dx;
      dx = 0.5 * (hi - lo);
      x = lo + dx;
    } else {
      dx_old = dx;
      dx = f / df;
      x -= dx;
    }
    if (std::abs(dx) < xtol) return x;
    std::tie(f, df) = fdf(x);
    if (f == 0.0) return x;
    if (f < 0.0) lo = x; else hi = x;
    if (std::abs(hi - lo) < xtol) return 0.5 * (lo + hi);
  }
  return x;
}

/// Plain bisection for monotone f with f(lo) and f(hi) of opposite sign.
template <class F>
double bisect(F&& f, double lo, double hi, double xtol, int max_iter = 400) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  for (int it = 0; it < max_iter && std::abs(hi - lo) > xtol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace snfit::detail
