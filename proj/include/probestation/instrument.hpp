#pragma once

// Error model of the probe station: averaged load-cell readout with a calibration scale error,
// periodic actuator positioning error, and a finite-stiffness apparatus in series with the device.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "probestation/contact.hpp"
#include "probestation/error.hpp"
#include "probestation/mechanics.hpp"
#include "probestation/stats.hpp"
#include "probestation/units.hpp"

namespace probestation {

struct LoadCellModel {
  double noise_std_single = 1e-3;  // N, one raw sample
  double sample_rate = 2e4;        // Hz
  double avg_window = 3.0;         // s
  double calibration_bias = 0.025;  // readout = (1 + bias) * true force
  double range_max = 0.25;          // N

  [[nodiscard]] long long n_samples() const { return std::llround(sample_rate * avg_window); }
  [[nodiscard]] double estimator_std() const {
    return noise_std_single / std::sqrt(static_cast<double>(n_samples()));
  }
};

inline void validate(const LoadCellModel& c) {
  if (!(c.noise_std_single >= 0.0)) throw ConfigError("load_cell.noise_std_single must be >= 0");
  if (!(c.sample_rate > 0.0)) throw ConfigError("load_cell.sample_rate must be > 0");
  if (!(c.avg_window > 0.0)) throw ConfigError("load_cell.avg_window must be > 0");
  if (!(c.range_max > 0.0)) throw ConfigError("load_cell.range_max must be > 0");
  if (!(c.calibration_bias > -1.0)) throw ConfigError("load_cell.calibration_bias must be > -1");
  if (c.n_samples() < 1) throw ConfigError("load_cell: sample_rate * avg_window must round to >= 1");
}

struct ActuatorModel {
  double step_size = 1e-7;         // m
  double cyclic_amplitude = 1e-6;  // m
  double cyclic_period = 10e-6;    // m
  double cyclic_phase = 0.0;       // rad
};

inline void validate(const ActuatorModel& a) {
  if (!(a.step_size > 0.0)) throw ConfigError("actuator.step_size must be > 0");
  if (!(a.cyclic_amplitude >= 0.0)) throw ConfigError("actuator.cyclic_amplitude must be >= 0");
  if (!(a.cyclic_period > 0.0)) throw ConfigError("actuator.cyclic_period must be > 0");
}

struct ApparatusModel {
  double stiffness = 4635.0;  // N/m; +infinity for a rigid rig
};

inline void validate(const ApparatusModel& a) {
  if (!(a.stiffness > 0.0)) throw ConfigError("apparatus.stiffness must be > 0");
}

struct InstrumentModel {
  LoadCellModel load_cell;
  ActuatorModel actuator;
  ApparatusModel apparatus;

  /// All error channels off: no noise, no bias, no cyclic error, rigid apparatus.
  static InstrumentModel ideal() {
    InstrumentModel m;
    m.load_cell.noise_std_single = 0.0;
    m.load_cell.calibration_bias = 0.0;
    m.actuator.cyclic_amplitude = 0.0;
    m.apparatus.stiffness = std::numeric_limits<double>::infinity();
    return m;
  }
};

inline void validate(const InstrumentModel& m) {
  validate(m.load_cell);
  validate(m.actuator);
  validate(m.apparatus);
}

using Rng = std::mt19937_64;

/// Independent stream seed for run `index` of a batch seeded with `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

struct ForceReading {
  double estimate = 0.0;  // N
  double std = 0.0;       // N, standard deviation of the averaged estimator
};

/// Average of n_samples raw load-cell samples, each (1 + bias) * F plus white Gaussian noise.
inline ForceReading read_force(double true_force, const LoadCellModel& cell, Rng& rng) {
  if (std::abs(true_force) > cell.range_max)
    throw RangeError("load cell saturated: |F| = " + std::to_string(true_force) + " N exceeds range " +
                         std::to_string(cell.range_max) + " N",
                     cell.range_max);
  const double mean = (1.0 + cell.calibration_bias) * true_force;
  const long long n = cell.n_samples();
  if (cell.noise_std_single == 0.0) return {mean, 0.0};
  std::normal_distribution<double> noise(0.0, cell.noise_std_single);
  double sum = 0.0;
  for (long long i = 0; i < n; ++i) sum += noise(rng);
  return {mean + sum / static_cast<double>(n), cell.estimator_std()};
}

/// Commanded position plus the periodic positioning error A sin(2 pi z / P + phi).
inline double actual_position(double z_cmd, const ActuatorModel& act) {
  if (!(z_cmd >= 0.0)) throw DomainError("commanded position must be >= 0");
  return z_cmd + act.cyclic_amplitude *
                     std::sin(2.0 * units::pi * z_cmd / act.cyclic_period + act.cyclic_phase);
}

struct Partition {
  double z_dut = 0.0;  // device deflection, m
  double force = 0.0;  // N
  int iterations = 0;
};

/// Split the actual actuator travel between the apparatus and the device:
/// z_actual = z_dut + F(z_dut) / k_app, solved by fixed-point iteration.
/// `device_force(z)` must return 0 for z <= 0 (stylus above the surface).
template <class ForceFn>
Partition deflection_partition(double z_actual, ForceFn&& device_force, const ApparatusModel& app,
                               int max_iter = 100) {
  validate(app);
  if (z_actual <= 0.0) return {z_actual, 0.0, 0};
  double z = z_actual;
  double f = device_force(z);
  for (int it = 1; it <= max_iter; ++it) {
    const double next = std::max(z_actual - f / app.stiffness, 0.0);
    const double step = std::abs(next - z);
    z = next;
    f = device_force(z);
    if (step <= 1e-15 + 1e-13 * z_actual) return {z, f, it};
  }
  throw SolverError("apparatus/device deflection split did not converge",
                    std::abs(z_actual - z - f / app.stiffness), z_actual);
}

/// Limit of an infinitely stiff target: all travel goes into the apparatus.
inline Partition rigid_target_partition(double z_actual, const ApparatusModel& app) {
  validate(app);
  if (z_actual <= 0.0) return {0.0, 0.0, 0};
  return {0.0, app.stiffness * z_actual, 0};
}

struct MeasurementRecord {
  double z_cmd = 0.0;      // m
  double z_actual = 0.0;   // m
  double z_dut = 0.0;      // m
  double F_true = 0.0;     // N, vertical force on the stylus
  double F_readout = 0.0;  // N
  double F_readout_std = 0.0;
  ContactMode mode = ContactMode::NoContact;
};

struct MeasurementMeta {
  std::string device_id;
  double x_s = 0.0;              // actual stylus position including placement error, m
  double placement_error = 0.0;  // m
  std::uint64_t seed = 0;
  InstrumentModel instrument;
};

struct MeasurementTrace {
  std::vector<MeasurementRecord> records;
  MeasurementMeta meta;
  bool fractured = false;
};

/// Commanded grid as executed by the actuator: positions rounded to whole steps.
inline std::vector<double> quantize_to_steps(const std::vector<double>& z_cmd, const ActuatorModel& act) {
  std::vector<double> out;
  out.reserve(z_cmd.size());
  for (double z : z_cmd) {
    const double q = std::round(z / act.step_size) * act.step_size;
    if (!out.empty() && !(q > out.back()))
      throw ConfigError("commanded grid is not strictly increasing at the actuator step size");
    out.push_back(q);
  }
  return out;
}

/// One simulated measurement run: actuator error -> series split with the apparatus ->
/// contact equilibrium -> averaged load-cell readout. After a fracture the device carries no load;
/// the breaking step is recorded and the run stops.
inline MeasurementTrace run_virtual_measurement(const DeviceSpec& device, const StylusSpec& stylus,
                                                const PlacementSpec& placement, double placement_error,
                                                const InstrumentModel& instrument,
                                                const std::vector<double>& z_cmd_grid, std::uint64_t seed,
                                                const SolverConfig& cfg = {}) {
  validate(instrument);
  const PlacementSpec actual_placement{placement.x_s + placement_error};
  const ContactModel model(device, stylus, actual_placement, cfg);
  const auto grid = quantize_to_steps(z_cmd_grid, instrument.actuator);
  if (!grid.empty() && grid.front() < 0.0) throw DomainError("commanded grid must start at z >= 0");

  MeasurementTrace trace;
  trace.meta = {device.id, actual_placement.x_s, placement_error, seed, instrument};
  Rng rng(seed);
  std::optional<EquilibriumState> prev;
  const double strength = device.material.fracture_strength;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    MeasurementRecord rec;
    rec.z_cmd = grid[i];
    try {
      rec.z_actual = actual_position(rec.z_cmd, instrument.actuator);
      EquilibriumState last;
      auto force = [&](double z) {
        if (z <= 0.0) {
          last = EquilibriumState{};
          return 0.0;
        }
        last = model.solve(z, prev ? &*prev : nullptr);
        return last.F_z;
      };
      const Partition part = deflection_partition(rec.z_actual, force, instrument.apparatus);
      rec.z_dut = part.z_dut;
      rec.F_true = part.force;
      rec.mode = last.mode;
      if (last.sigma_root >= strength) {
        trace.fractured = true;
        rec.F_true = 0.0;
        rec.mode = ContactMode::Fractured;
      } else if (last.mode != ContactMode::NoContact) {
        prev = last;
      }
      const ForceReading r = read_force(rec.F_true, instrument.load_cell, rng);
      rec.F_readout = r.estimate;
      rec.F_readout_std = instrument.load_cell.estimator_std();
    } catch (const SolverError& e) {
      throw SolverError("step " + std::to_string(i) + ": " + e.what(), e.last_residual(), rec.z_cmd);
    } catch (const RangeError& e) {
      throw RangeError("step " + std::to_string(i) + ": " + e.what(), e.limit());
    }
    trace.records.push_back(rec);
    if (trace.fractured) break;
  }
  return trace;
}

/// Push onto a non-deflecting target (force-restoring scale pan) and fit force against commanded
/// position. Readouts are corrected for the known calibration bias before fitting. When the
/// actuator has a cyclic error and the grid spans more than one period, a sine/cosine pair at the
/// actuator period is fitted alongside the line so the error does not leak into the slope.
inline double estimate_apparatus_stiffness(const InstrumentModel& instrument, const std::vector<double>& z_grid,
                                           std::uint64_t seed) {
  validate(instrument);
  Rng rng(seed);
  std::vector<double> z;
  std::vector<double> f;
  for (double zc : quantize_to_steps(z_grid, instrument.actuator)) {
    const double za = actual_position(zc, instrument.actuator);
    const Partition p = rigid_target_partition(za, instrument.apparatus);
    const ForceReading r = read_force(p.force, instrument.load_cell, rng);
    z.push_back(zc);
    f.push_back(r.estimate / (1.0 + instrument.load_cell.calibration_bias));
  }
  const auto& act = instrument.actuator;
  const bool harmonic = act.cyclic_amplitude > 0.0 && z.size() >= 6 && z.back() - z.front() >= 1.5 * act.cyclic_period;
  if (!harmonic) return ols(z, f).slope;
  const double z0 = z.front();
  const double span = z.back() - z.front();
  std::vector<std::vector<double>> cols(2, std::vector<double>(z.size()));
  std::vector<double> sn(z.size());
  std::vector<double> cs(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double ph = 2.0 * units::pi * z[i] / act.cyclic_period;
    cols[0][i] = 1.0;
    cols[1][i] = (z[i] - z0) / span;
    sn[i] = std::sin(ph);
    cs[i] = std::cos(ph);
  }
  // a harmonic that is constant on the grid is already absorbed by the intercept
  if (sample_std(sn) > 1e-6) cols.push_back(std::move(sn));
  if (sample_std(cs) > 1e-6) cols.push_back(std::move(cs));
  return least_squares(cols, f)[1] / span;
}

}  // namespace probestation
