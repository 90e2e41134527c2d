#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "probestation/error.hpp"

namespace probestation {

struct RootResult {
  double x = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Newton iteration safeguarded by a bracket [lo, hi] with f(lo) <= 0 <= f(hi) (or the reverse).
/// Any Newton step that leaves the bracket, or fails to halve the bracket width over two steps,
/// is replaced by bisection. Stops when |f| < ftol or the bracket has collapsed to machine precision.
template <class F>
RootResult safeguarded_newton(F&& f, double lo, double hi, double x0, double ftol, int max_iter) {
  double flo = f(lo);
  double fhi = f(hi);
  if (std::abs(flo) < ftol) return {lo, flo, 0};
  if (std::abs(fhi) < ftol) return {hi, fhi, 0};
  if ((flo > 0.0) == (fhi > 0.0))
    throw SolverError("root not bracketed", std::min(std::abs(flo), std::abs(fhi)));
  // orient so that f(lo) < 0 < f(hi)
  const bool increasing = flo < 0.0;

  double x = (x0 > lo && x0 < hi) ? x0 : 0.5 * (lo + hi);
  double fx = f(x);
  double prev_width = hi - lo;
  int slow_steps = 0;
  for (int it = 1; it <= max_iter; ++it) {
    if (std::abs(fx) < ftol) return {x, fx, it};
    if ((fx < 0.0) == increasing) {
      lo = x;
    } else {
      hi = x;
    }
    const double width = hi - lo;
    if (width <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)))
      return {x, fx, it};
    slow_steps = width > 0.5 * prev_width ? slow_steps + 1 : 0;
    prev_width = width;

    const double h = 1e-7 * std::max(1e-3, std::abs(x));
    const double dfdx = (f(x + h) - f(x - h)) / (2.0 * h);
    double next = (dfdx != 0.0 && std::isfinite(dfdx)) ? x - fx / dfdx : lo;
    if (!(next > lo && next < hi) || slow_steps >= 3) {
      next = 0.5 * (lo + hi);
      slow_steps = 0;
    }
    x = next;
    fx = f(x);
  }
  if (std::abs(fx) < ftol) return {x, fx, max_iter};
  throw SolverError("safeguarded Newton did not converge", std::abs(fx));
}

/// Plain bisection on a predicate that is false at lo and true at hi.
/// Returns the smallest sampled point where the predicate holds, within `tol`.
template <class P>
double bisect_predicate(P&& pred, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace probestation
