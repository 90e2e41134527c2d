#pragma once

// Instrument-agnostic analysis of force-deflection traces.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probestation/contact.hpp"
#include "probestation/error.hpp"
#include "probestation/instrument.hpp"
#include "probestation/stats.hpp"

namespace probestation {

struct Trace {
  std::vector<double> z;                       // m, strictly increasing
  std::vector<double> F;                       // N
  std::optional<std::vector<double>> std;      // N, per-point standard deviation
  std::optional<std::vector<ContactMode>> modes;
  std::string source;

  [[nodiscard]] std::size_t size() const { return z.size(); }
};

inline void validate(const Trace& t) {
  if (t.z.size() != t.F.size()) throw AnalysisError("trace: z and F differ in length");
  if (t.std && t.std->size() != t.z.size()) throw AnalysisError("trace: std column length mismatch");
  if (t.modes && t.modes->size() != t.z.size()) throw AnalysisError("trace: mode column length mismatch");
  for (std::size_t i = 0; i < t.z.size(); ++i) {
    if (!std::isfinite(t.z[i]) || !std::isfinite(t.F[i]))
      throw AnalysisError("trace: non-finite value at point " + std::to_string(i));
    if (i > 0 && !(t.z[i] > t.z[i - 1]))
      throw AnalysisError("trace: z not strictly increasing at point " + std::to_string(i));
  }
}

inline Trace to_trace(const SimTrace& sim, std::string source = "simulation") {
  Trace t;
  t.source = std::move(source);
  std::vector<ContactMode> modes;
  for (const auto& s : sim.states) {
    t.z.push_back(s.z_act);
    t.F.push_back(s.F_z);
    modes.push_back(s.mode);
  }
  t.modes = std::move(modes);
  return t;
}

/// Force readout against commanded position, as a real instrument would record it.
inline Trace to_trace(const MeasurementTrace& m, std::string source = "measurement") {
  Trace t;
  t.source = std::move(source);
  std::vector<double> sd;
  for (const auto& r : m.records) {
    t.z.push_back(r.z_cmd);
    t.F.push_back(r.F_readout);
    sd.push_back(r.F_readout_std);
  }
  t.std = std::move(sd);
  return t;
}

// ---------------------------------------------------------------------------------------------
// Fitting and corrections

struct StiffnessFit {
  double k = 0.0;          // N/m
  double intercept = 0.0;  // N
  double z_lo = 0.0;       // m
  double z_hi = 0.0;       // m
  double residual_std = 0.0;
  double k_stderr = 0.0;
  std::size_t count = 0;
};

/// OLS of F on z over points with z_lo <= z <= z_hi.
inline StiffnessFit fit_stiffness(const Trace& trace, double z_lo, double z_hi) {
  std::vector<double> z;
  std::vector<double> f;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.z[i] >= z_lo && trace.z[i] <= z_hi) {
      z.push_back(trace.z[i]);
      f.push_back(trace.F[i]);
    }
  }
  if (z.size() < 3)
    throw AnalysisError("fit_stiffness: need at least 3 points in [" + std::to_string(z_lo) + ", " +
                        std::to_string(z_hi) + "], found " + std::to_string(z.size()));
  const LineFit lf = ols(z, f);
  return {lf.slope, lf.intercept, z.front(), z.back(), lf.residual_std, lf.slope_stderr, lf.n};
}

/// Undo a multiplicative calibration error: F_true = F_read / (1 + bias).
inline double correct_calibration(double force, double bias) {
  if (!(1.0 + bias > 0.0)) throw DomainError("calibration bias must be > -1");
  return force / (1.0 + bias);
}

/// Stiffness measured through an apparatus of stiffness k_app in series with the device.
inline double series_stiffness(double k, double k_app) { return 1.0 / (1.0 / k + 1.0 / k_app); }

/// Remove the apparatus compliance from a measured stiffness.
inline double correct_compliance(double k_meas, double k_app) {
  if (!(k_meas > 0.0)) throw DomainError("measured stiffness must be > 0");
  if (!(k_meas < k_app))
    throw DomainError("measured stiffness " + std::to_string(k_meas) + " N/m is not below the apparatus stiffness " +
                      std::to_string(k_app) + " N/m");
  return 1.0 / (1.0 / k_meas - 1.0 / k_app);
}

// ---------------------------------------------------------------------------------------------
// Regime segmentation

enum class Regime { Linear, Geometric, Contact };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Linear: return "linear";
    case Regime::Geometric: return "geometric";
    case Regime::Contact: return "contact";
  }
  return "linear";
}

struct ForcePoint {
  double z = 0.0;
  double F = 0.0;
};

struct RegimeSegmentation {
  double linear_end_z = 0.0;
  ForcePoint fz_max;
  std::optional<ForcePoint> slide_off_bump;
  std::optional<ForcePoint> fracture;
  std::optional<double> contact_start_z;
  std::vector<Regime> labels;
  double low_z_slope = 0.0;  // N/m, slope of the low-z reference fit
};

struct SegmentOptions {
  double lin_tol = 0.03;           // relative deviation from the low-z fit
  int lin_consecutive = 3;         // points in a row that must exceed lin_tol
  double low_fit_fraction = 0.05;  // leading fraction of the trace used for the reference fit
  double collapse_fraction = 0.8;  // terminal drop from the running max that counts as fracture
  double drop_factor = 3.0;        // abrupt step: decrement > drop_factor * median decrement
  double rel_tol = 0.005;          // fraction of the peak force treated as significant
};

namespace detail {

inline double noise_at(const Trace& t, std::size_t i) { return t.std ? (*t.std)[i] : 0.0; }

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace detail

/// Split a force-deflection trace into linear, geometrically nonlinear and contact regimes.
/// Mode labels, when present, locate contact onset and fracture; otherwise both are inferred from
/// the force curve (valley after the first significant peak; terminal collapse).
inline RegimeSegmentation segment_regimes(const Trace& trace, const SegmentOptions& opt = {}) {
  validate(trace);
  const std::size_t n_all = trace.size();
  if (n_all < 10) throw AnalysisError("segment_regimes: need at least 10 points");
  const auto& z = trace.z;
  const auto& F = trace.F;
  RegimeSegmentation seg;

  double noise = 0.0;
  if (trace.std) noise = *std::max_element(trace.std->begin(), trace.std->end());

  // fracture and the end of the analysable span
  std::size_t end = n_all;  // exclusive
  if (trace.modes) {
    const auto& m = *trace.modes;
    auto it = std::find(m.begin(), m.end(), ContactMode::Fractured);
    if (it != m.end()) {
      const auto j = static_cast<std::size_t>(it - m.begin());
      if (j > 0) {
        seg.fracture = ForcePoint{z[j - 1], F[j - 1]};
        end = j;
      }
    }
  } else {
    double run_max = F[0];
    for (std::size_t j = 1; j < n_all; ++j) {
      if (run_max > 3.0 * noise && run_max > 0.0 && F[j] < (1.0 - opt.collapse_fraction) * run_max) {
        seg.fracture = ForcePoint{z[j - 1], F[j - 1]};
        end = j;
        break;
      }
      run_max = std::max(run_max, F[j]);
    }
  }
  if (end < 3) throw AnalysisError("segment_regimes: trace collapses before any usable data");

  // contact onset
  std::optional<std::size_t> onset;
  if (trace.modes) {
    const auto& m = *trace.modes;
    for (std::size_t i = 0; i < end; ++i) {
      if (m[i] == ContactMode::EdgeContact || m[i] == ContactMode::FlankContact) {
        onset = i;
        break;
      }
    }
    if (onset && m[*onset] == ContactMode::EdgeContact) {
      std::size_t best = *onset;
      for (std::size_t i = *onset; i < end && m[i] == ContactMode::EdgeContact; ++i) {
        if (F[i] < F[best]) best = i;
      }
      seg.slide_off_bump = ForcePoint{z[best], F[best]};
    }
  } else {
    const double peak_all = *std::max_element(F.begin(), F.begin() + static_cast<std::ptrdiff_t>(end));
    const double tol = std::max(opt.rel_tol * std::abs(peak_all), 3.0 * std::sqrt(2.0) * noise);
    std::size_t p = 0;
    std::optional<std::size_t> peak;
    for (std::size_t i = 1; i < end; ++i) {
      if (F[i] > F[p]) {
        p = i;
      } else if (F[p] - F[i] > tol) {
        peak = p;
        break;
      }
    }
    if (peak) {
      std::size_t m = *peak;
      std::size_t q = *peak + 1;
      for (; q < end && F[q] <= F[*peak]; ++q) {
        if (F[q] < F[m]) m = q;
      }
      double rise = 0.0;
      for (std::size_t i = m; i < end; ++i) rise = std::max(rise, F[i] - F[m]);
      if (rise > tol && m + 1 < end) {
        onset = m;
        std::vector<double> dec;
        double max_dec = 0.0;
        for (std::size_t i = *peak + 1; i <= m; ++i) {
          dec.push_back(std::abs(F[i] - F[i - 1]));
          max_dec = std::max(max_dec, F[i - 1] - F[i]);
        }
        const double typical = detail::median(dec);
        if (max_dec > opt.drop_factor * typical && max_dec > 3.0 * std::sqrt(2.0) * noise)
          seg.slide_off_bump = ForcePoint{z[m], F[m]};
      }
    }
  }

  // maximum of the geometric span
  const std::size_t pre_end = onset ? *onset : end;
  std::size_t i_max = 0;
  for (std::size_t i = 1; i < pre_end; ++i) {
    if (F[i] > F[i_max]) i_max = i;
  }
  seg.fz_max = ForcePoint{z[i_max], F[i_max]};

  // low-z reference fit and end of the linear regime
  std::size_t first = 0;
  while (first < i_max && z[first] <= 0.0) ++first;
  const auto n_fit = std::max<std::size_t>(
      3, static_cast<std::size_t>(std::ceil(opt.low_fit_fraction * static_cast<double>(n_all))));
  const std::size_t fit_end = std::min(first + n_fit, i_max + 1);
  std::size_t lin_end = i_max;
  if (fit_end >= first + 3) {
    const LineFit lf = ols(std::span<const double>(z.data() + first, fit_end - first),
                           std::span<const double>(F.data() + first, fit_end - first));
    seg.low_z_slope = lf.slope;
    int run = 0;
    for (std::size_t i = first; i <= i_max; ++i) {
      const double pred = lf.slope * z[i] + lf.intercept;
      const bool off = std::abs(F[i] - pred) > opt.lin_tol * std::abs(pred) + 3.0 * detail::noise_at(trace, i);
      run = off ? run + 1 : 0;
      if (run >= opt.lin_consecutive) {
        const std::size_t start = i + 1 - static_cast<std::size_t>(opt.lin_consecutive);
        lin_end = start > 0 ? start - 1 : 0;
        break;
      }
    }
  }
  seg.linear_end_z = z[lin_end];
  if (onset) seg.contact_start_z = z[*onset];

  seg.labels.resize(n_all, Regime::Contact);
  for (std::size_t i = 0; i < n_all; ++i) {
    if (z[i] <= seg.linear_end_z) {
      seg.labels[i] = Regime::Linear;
    } else if (i < pre_end) {
      seg.labels[i] = Regime::Geometric;
    }
  }
  return seg;
}

// ---------------------------------------------------------------------------------------------
// Placement sensitivity and sample-to-sample variation

namespace detail {

/// Largest |F_a - F_b| over grid points where both sweeps are still sliding on the top surface.
inline double max_sliding_difference(const SimTrace& a, const SimTrace& b) {
  double worst = 0.0;
  const std::size_t n = std::min(a.states.size(), b.states.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sa = a.states[i];
    const auto& sb = b.states[i];
    const bool ok_a = sa.mode == ContactMode::SurfaceSliding || sa.mode == ContactMode::NoContact;
    const bool ok_b = sb.mode == ContactMode::SurfaceSliding || sb.mode == ContactMode::NoContact;
    if (!ok_a || !ok_b) break;
    worst = std::max(worst, std::abs(sa.F_z - sb.F_z));
  }
  return worst;
}

}  // namespace detail

/// For each placement offset, the largest vertical-force difference from the base placement at
/// matched depth, over the span before either sweep leaves the top surface. Noiseless.
inline std::vector<double> placement_sensitivity(const DeviceSpec& device, const StylusSpec& stylus, double base_x_s,
                                                 const std::vector<double>& deltas, const std::vector<double>& z_grid,
                                                 const SolverConfig& cfg = {}) {
  const SimTrace base = run_sweep(device, stylus, {base_x_s}, z_grid, cfg);
  std::vector<double> out;
  out.reserve(deltas.size());
  for (double d : deltas) {
    if (d == 0.0) {
      out.push_back(0.0);
      continue;
    }
    const SimTrace other = run_sweep(device, stylus, {base_x_s + d}, z_grid, cfg);
    out.push_back(detail::max_sliding_difference(base, other));
  }
  return out;
}

/// Width of the force band swept out by placements in [base - a, base + a]: the largest
/// |F(base - a) - F(base + a)| at matched depth over the sliding span.
inline double placement_band(const DeviceSpec& device, const StylusSpec& stylus, double base_x_s, double a,
                             const std::vector<double>& z_grid, const SolverConfig& cfg = {}) {
  const SimTrace lo = run_sweep(device, stylus, {base_x_s - a}, z_grid, cfg);
  const SimTrace hi = run_sweep(device, stylus, {base_x_s + a}, z_grid, cfg);
  return detail::max_sliding_difference(lo, hi);
}

struct VariationReport {
  std::vector<StiffnessFit> fits;
  double max_deviation = 0.0;  // N
  double envelope = 0.0;       // N
  bool within_envelope = true;
  double z_lo = 0.0;
  double z_hi = 0.0;
};

struct CompareOptions {
  double fit_lo = 5e-6;
  double fit_hi = 50e-6;
  double min_overlap = 0.5;  // required overlap as a fraction of the shortest trace's z range
};

/// Linear interpolation of F at z; z must lie inside the trace.
inline double interpolate(const Trace& t, double zq) {
  auto it = std::lower_bound(t.z.begin(), t.z.end(), zq);
  if (it == t.z.end()) return t.F.back();
  const auto j = static_cast<std::size_t>(it - t.z.begin());
  if (t.z[j] == zq || j == 0) return t.F[j];
  const double w = (zq - t.z[j - 1]) / (t.z[j] - t.z[j - 1]);
  return t.F[j - 1] + w * (t.F[j] - t.F[j - 1]);
}

/// Pairwise comparison of traces at matched z (union of all sample points in the common range).
inline VariationReport compare_samples(const std::vector<Trace>& traces, double envelope,
                                       const CompareOptions& opt = {}) {
  if (traces.size() < 2) throw AnalysisError("compare_samples: need at least two traces");
  if (!(envelope >= 0.0)) throw AnalysisError("compare_samples: envelope must be >= 0");
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double shortest = std::numeric_limits<double>::infinity();
  for (const auto& t : traces) {
    validate(t);
    if (t.size() < 2) throw AnalysisError("compare_samples: trace with fewer than two points");
    lo = std::max(lo, t.z.front());
    hi = std::min(hi, t.z.back());
    shortest = std::min(shortest, t.z.back() - t.z.front());
  }
  if (!(hi > lo) || (hi - lo) < opt.min_overlap * shortest)
    throw AnalysisError("compare_samples: traces do not share enough z range");

  VariationReport rep;
  rep.envelope = envelope;
  rep.z_lo = lo;
  rep.z_hi = hi;
  std::vector<double> grid;
  for (const auto& t : traces) {
    for (double zz : t.z) {
      if (zz >= lo && zz <= hi) grid.push_back(zz);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<std::vector<double>> resampled;
  for (const auto& t : traces) {
    std::vector<double> f;
    f.reserve(grid.size());
    for (double zz : grid) f.push_back(interpolate(t, zz));
    resampled.push_back(std::move(f));
  }
  for (std::size_t a = 0; a < traces.size(); ++a) {
    for (std::size_t b = a + 1; b < traces.size(); ++b) {
      for (std::size_t i = 0; i < grid.size(); ++i)
        rep.max_deviation = std::max(rep.max_deviation, std::abs(resampled[a][i] - resampled[b][i]));
    }
  }
  rep.within_envelope = rep.max_deviation <= envelope;

  for (const auto& t : traces) {
    try {
      rep.fits.push_back(fit_stiffness(t, opt.fit_lo, opt.fit_hi));
    } catch (const AnalysisError&) {
      // window not covered: fall back to the leading fifth of the trace
      const double zz = t.z.front() + 0.2 * (t.z.back() - t.z.front());
      rep.fits.push_back(fit_stiffness(t, t.z.front(), zz));
    }
  }
  return rep;
}

/// Restrict a trace to z <= z_max.
inline Trace truncate(const Trace& t, double z_max) {
  Trace out;
  out.source = t.source;
  std::vector<double> sd;
  std::vector<ContactMode> md;
  for (std::size_t i = 0; i < t.size() && t.z[i] <= z_max; ++i) {
    out.z.push_back(t.z[i]);
    out.F.push_back(t.F[i]);
    if (t.std) sd.push_back((*t.std)[i]);
    if (t.modes) md.push_back((*t.modes)[i]);
  }
  if (t.std) out.std = std::move(sd);
  if (t.modes) out.modes = std::move(md);
  return out;
}

}  // namespace probestation
