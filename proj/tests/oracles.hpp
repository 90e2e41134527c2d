#pragma once

// Independent reference computations used only by the tests. None of these call into the
// library's solvers; they re-derive results from first principles by a different route.

#include <array>
#include <cmath>
#include <functional>
#include <random>

#include "probestation/mechanics.hpp"

namespace oracle {

/// Tip deflection and rotation by RK4 integration of w'' = M(x)/EI along the beam, with a root
/// rotation c_s * M_root from the rotational support spring.
inline std::array<double, 2> beam_tip_by_integration(double L, double EI, double Q, double M, double c_s,
                                                     int steps = 2000) {
  auto curvature = [&](double x) { return (Q * (L - x) + M) / EI; };
  double w = 0.0;
  double slope = c_s * (Q * L + M);
  const double h = L / steps;
  for (int i = 0; i < steps; ++i) {
    const double x = i * h;
    // y = (w, slope), y' = (slope, curvature(x))
    const double k1w = slope;
    const double k1s = curvature(x);
    const double k2w = slope + 0.5 * h * k1s;
    const double k2s = curvature(x + 0.5 * h);
    const double k3w = slope + 0.5 * h * k2s;
    const double k3s = curvature(x + 0.5 * h);
    const double k4w = slope + h * k3s;
    const double k4s = curvature(x + h);
    w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
    slope += h / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s);
  }
  return {w, slope};
}

/// Hertz peak pressure through the contact radius: a = (3FR/4E*)^(1/3), p0 = 3F/(2 pi a^2).
inline double hertz_p0_via_radius(double F, double R, double E1, double nu1, double E2, double nu2) {
  const double inv = (1 - nu1 * nu1) / E1 + (1 - nu2 * nu2) / E2;
  const double a = std::cbrt(3.0 * F * R * inv / 4.0);
  return 3.0 * F / (2.0 * M_PI * a * a);
}

/// Minimise the elastic energy of the beam over (delta, theta) subject to the sphere not
/// penetrating the tilted top plane of the rigid mass. Returns the vertical contact force at the
/// minimiser. K is the 2x2 tip stiffness matrix (inverse compliance). Valid while the contact stays
/// on the flat top surface.
struct BruteForceResult {
  double theta = 0.0;
  double delta = 0.0;
  double F_z = 0.0;
};

inline BruteForceResult min_energy_sliding(double K11, double K12, double K22, double x_s, double R, double z,
                                           double theta_max = 1.2) {
  auto delta_min = [&](double th) { return z - R - (x_s * std::sin(th) - R) / std::cos(th); };
  auto best_delta = [&](double th) { return std::max(delta_min(th), -K12 * th / K11); };
  auto energy = [&](double th) {
    const double d = best_delta(th);
    return 0.5 * (K11 * d * d + 2 * K12 * d * th + K22 * th * th);
  };
  const int n = 20000;
  double best = 0.0;
  double e_best = energy(0.0);
  for (int i = 1; i <= n; ++i) {
    const double th = theta_max * i / n;
    const double e = energy(th);
    if (e < e_best) {
      e_best = e;
      best = th;
    }
  }
  // golden-section refinement in the neighbouring cells
  double a = std::max(0.0, best - theta_max / n);
  double b = std::min(theta_max, best + theta_max / n);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  for (int it = 0; it < 200; ++it) {
    if (energy(c) < energy(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  BruteForceResult r;
  r.theta = 0.5 * (a + b);
  r.delta = best_delta(r.theta);
  r.F_z = K11 * r.delta + K12 * r.theta;
  return r;
}

/// Trapezoid rule.
inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

}  // namespace oracle
