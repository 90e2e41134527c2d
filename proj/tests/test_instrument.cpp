#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "probestation/analysis.hpp"
#include "probestation/config.hpp"
#include "probestation/instrument.hpp"
#include "probestation/presets.hpp"
#include "probestation/stats.hpp"

using namespace probestation;

namespace {

DeviceSpec ref() { return load_preset("REF-CANTILEVER"); }

double empirical_estimator_std(const LoadCellModel& cell, int reps, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(reps));
  for (int i = 0; i < reps; ++i) v.push_back(read_force(1e-3, cell, rng).estimate);
  return sample_std(v);
}

}  // namespace

TEST(LoadCell, DefaultsMatchSetup) {
  const LoadCellModel c;
  EXPECT_EQ(c.n_samples(), 60000);
  EXPECT_NEAR(c.estimator_std(), 1e-3 / std::sqrt(60000.0), 1e-18);
}

TEST(LoadCell, NoiselessReadoutIsBiasOnly) {
  LoadCellModel c;
  c.noise_std_single = 0.0;
  Rng rng(1);
  for (double f : {1e-6, 3.3e-3, -2e-3, 0.2}) {
    const auto r = read_force(f, c, rng);
    EXPECT_EQ(r.estimate, 1.025 * f);
    EXPECT_EQ(r.estimate / f, 1.0 + c.calibration_bias);
    EXPECT_EQ(r.std, 0.0);
  }
}

TEST(LoadCell, SingleSampleStdIsRawNoise) {
  LoadCellModel c;
  c.sample_rate = 1.0;
  c.avg_window = 1.0;
  const double s = empirical_estimator_std(c, 1000, 9);
  EXPECT_NEAR(s, 1e-3, 0.1e-3);
}

TEST(LoadCell, AveragedStdFollowsSqrtN) {
  for (double n : {1.0, 100.0, 1e4, 6e4}) {
    LoadCellModel c;
    c.sample_rate = n;
    c.avg_window = 1.0;
    const double s = empirical_estimator_std(c, 1000, static_cast<std::uint64_t>(n));
    const double expect = 1e-3 / std::sqrt(n);
    EXPECT_NEAR(s, expect, 0.1 * expect) << "N = " << n;
  }
}

TEST(LoadCell, DefaultEstimatorStdNearFourMicroNewton) {
  const double s = empirical_estimator_std(LoadCellModel{}, 1000, 2024);
  EXPECT_GE(s, 0.9 * 4.0825e-6);
  EXPECT_LE(s, 1.1 * 4.0825e-6);
}

TEST(LoadCell, SaturationIsRangeError) {
  Rng rng(1);
  try {
    (void)read_force(0.3, LoadCellModel{}, rng);
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_EQ(e.limit(), 0.25);
  }
  EXPECT_THROW(read_force(-0.26, LoadCellModel{}, rng), RangeError);
}

TEST(LoadCell, Validation) {
  LoadCellModel c;
  c.sample_rate = 0.1;
  c.avg_window = 1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.calibration_bias = -1.0;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Actuator, ZeroAmplitudeIsIdentity) {
  ActuatorModel a;
  a.cyclic_amplitude = 0.0;
  for (double z : {0.0, 1e-6, 3.7e-5, 1e-3}) EXPECT_EQ(actual_position(z, a), z);
}

TEST(Actuator, QuarterPeriodIsSineMaximum) {
  ActuatorModel a;
  a.cyclic_period = 10e-6;
  a.cyclic_phase = 0.0;
  EXPECT_NEAR(actual_position(2.5e-6, a), 2.5e-6 + 1e-6, 1e-18);
}

TEST(Actuator, ErrorBoundedByAmplitude) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2e-3);
  ActuatorModel a;
  a.cyclic_phase = 0.7;
  for (int i = 0; i < 10000; ++i) {
    const double z = u(rng);
    EXPECT_LE(std::abs(actual_position(z, a) - z), 1e-6 * (1.0 + 1e-12));
  }
  EXPECT_THROW(actual_position(-1e-9, a), DomainError);
}

TEST(Partition, NoLoadNoApparatusDeformation) {
  const auto p = deflection_partition(50e-6, [](double) { return 0.0; }, ApparatusModel{});
  EXPECT_EQ(p.z_dut, 50e-6);
  EXPECT_EQ(p.force, 0.0);
}

TEST(Partition, RigidTarget) {
  const auto p = rigid_target_partition(1e-6, ApparatusModel{});
  EXPECT_EQ(p.z_dut, 0.0);
  EXPECT_NEAR(p.force, 4.635e-3, 1e-15);
}

TEST(Partition, LinearDeviceClosedForm) {
  const double k = 10.0;
  const double ka = 4635.0;
  const auto p = deflection_partition(100e-6, [&](double z) { return k * z; }, ApparatusModel{ka});
  const double expect = 100e-6 * ka / (ka + k);
  EXPECT_NEAR(p.z_dut, expect, 1e-12 * expect);
  EXPECT_NEAR(p.force, k * expect, 1e-12 * k * expect);
}

TEST(Partition, DivergentSplitIsSolverError) {
  // device far stiffer than the apparatus: fixed point does not contract
  EXPECT_THROW(deflection_partition(1e-6, [](double z) { return 1e6 * z; }, ApparatusModel{10.0}), SolverError);
}

TEST(Measurement, IdealInstrumentReproducesSimulation) {
  const auto d = ref();
  const auto p = PlacementSpec::at_cosym(d);
  const auto grid = make_grid(0.0, 1.3e-3, 5e-6);
  const auto sim = run_sweep(d, presets::default_stylus(), p, grid);
  const auto m = run_virtual_measurement(d, presets::default_stylus(), p, 0.0, InstrumentModel::ideal(), grid, 1);
  ASSERT_EQ(m.records.size(), sim.states.size());
  for (std::size_t i = 0; i < sim.states.size(); ++i) {
    EXPECT_NEAR(m.records[i].F_readout, sim.states[i].F_z, 1e-9 * std::abs(sim.states[i].F_z));
    EXPECT_EQ(m.records[i].mode, sim.states[i].mode);
  }
  EXPECT_TRUE(m.fractured);
}

TEST(Measurement, SameSeedSameTrace) {
  const auto d = ref();
  const auto grid = make_grid(0.0, 100e-6, 2e-6);
  const InstrumentModel inst;
  const auto a = run_virtual_measurement(d, presets::default_stylus(), PlacementSpec::at_cosym(d), 0.0, inst, grid, 77);
  const auto b = run_virtual_measurement(d, presets::default_stylus(), PlacementSpec::at_cosym(d), 0.0, inst, grid, 77);
  const auto c = run_virtual_measurement(d, presets::default_stylus(), PlacementSpec::at_cosym(d), 0.0, inst, grid, 78);
  ASSERT_EQ(a.records.size(), b.records.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].F_readout, b.records[i].F_readout);
    differs = differs || a.records[i].F_readout != c.records[i].F_readout;
  }
  EXPECT_TRUE(differs);
}

TEST(Measurement, RecordedStdIsEstimatorStd) {
  const auto d = ref();
  const InstrumentModel inst;
  const auto m = run_virtual_measurement(d, presets::default_stylus(), PlacementSpec::at_cosym(d), 0.0, inst,
                                         make_grid(0.0, 40e-6, 2e-6), 5);
  for (const auto& r : m.records) EXPECT_EQ(r.F_readout_std, inst.load_cell.estimator_std());
  for (std::size_t i = 1; i < m.records.size(); ++i) EXPECT_GT(m.records[i].z_cmd, m.records[i - 1].z_cmd);
}

TEST(Measurement, NoiseStaysWithinThreeSigma) {
  const auto d = ref();
  const auto p = PlacementSpec::at_cosym(d);
  const auto grid = make_grid(0.0, 100e-6, 10e-6);
  InstrumentModel quiet;
  quiet.load_cell.noise_std_single = 0.0;
  const auto clean = run_virtual_measurement(d, presets::default_stylus(), p, 0.0, quiet, grid, 0);
  int inside = 0;
  int total = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto m = run_virtual_measurement(d, presets::default_stylus(), p, 0.0, InstrumentModel{}, grid, seed);
    for (std::size_t i = 0; i < m.records.size(); ++i) {
      ++total;
      if (std::abs(m.records[i].F_readout - clean.records[i].F_readout) <= 3.0 * m.records[i].F_readout_std) ++inside;
    }
  }
  EXPECT_GE(inside, static_cast<int>(std::ceil(0.99 * total)));
}

TEST(Measurement, PlacementErrorShiftsStylus) {
  const auto d = ref();
  const auto m = run_virtual_measurement(d, presets::default_stylus(), PlacementSpec::at_cosym(d), -20e-6,
                                         InstrumentModel::ideal(), make_grid(0.0, 20e-6, 5e-6), 1);
  EXPECT_DOUBLE_EQ(m.meta.x_s, d.cosym() - 20e-6);
  EXPECT_EQ(m.meta.placement_error, -20e-6);
  const auto base = run_virtual_measurement(d, presets::default_stylus(), PlacementSpec::at_cosym(d), 0.0,
                                            InstrumentModel::ideal(), make_grid(0.0, 20e-6, 5e-6), 1);
  EXPECT_GT(m.records.back().F_readout, base.records.back().F_readout);
}

TEST(Measurement, SaturationCarriesStepIndex) {
  const auto d = ref();
  InstrumentModel inst = InstrumentModel::ideal();
  inst.load_cell.range_max = 105e-6;
  try {
    (void)run_virtual_measurement(d, presets::default_stylus(), PlacementSpec::at_cosym(d), 0.0, inst,
                                  make_grid(0.0, 50e-6, 1e-6), 1);
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("step 11"), std::string::npos) << e.what();
  }
}

TEST(ApparatusStiffness, NoiselessIsExact) {
  InstrumentModel inst = InstrumentModel::ideal();
  inst.apparatus.stiffness = 4635.0;
  const double k = estimate_apparatus_stiffness(inst, make_grid(0.0, 2e-6, 0.1e-6), 1);
  EXPECT_NEAR(k, 4635.0, 1e-9 * 4635.0);
}

TEST(ApparatusStiffness, DefaultsWithinOnePercent) {
  const double k = estimate_apparatus_stiffness(InstrumentModel{}, make_grid(0.0, 20e-6, 1e-6), 3);
  EXPECT_NEAR(k, 4635.0, 0.01 * 4635.0);
}

TEST(ApparatusStiffness, LongerAveragingFollowsSqrtN) {
  // doubling the averaging window halves the variance of the fitted slope (std ratio 1/sqrt 2)
  InstrumentModel inst;
  inst.actuator.cyclic_amplitude = 0.0;
  inst.load_cell.sample_rate = 2e3;
  const auto grid = make_grid(0.0, 2e-6, 0.2e-6);
  auto spread = [&](double window) {
    inst.load_cell.avg_window = window;
    std::vector<double> k;
    for (std::uint64_t s = 0; s < 200; ++s) k.push_back(estimate_apparatus_stiffness(inst, grid, derive_seed(99, s)));
    return sample_std(k);
  };
  const double ratio = spread(6.0) / spread(3.0);
  EXPECT_NEAR(ratio, 1.0 / std::sqrt(2.0), 0.2 / std::sqrt(2.0));
}

TEST(CyclicError, SamplingAtPeriodCancels) {
  const auto d = ref();
  const auto p = PlacementSpec::at_cosym(d);
  InstrumentModel inst = InstrumentModel::ideal();
  inst.actuator.cyclic_period = 10e-6;
  inst.actuator.cyclic_phase = 0.3;
  auto slope = [&](double amplitude, double spacing) {
    inst.actuator.cyclic_amplitude = amplitude;
    std::vector<double> grid;
    for (int i = 1; spacing * i <= 50e-6 + 1e-12; ++i) grid.push_back(spacing * i);
    const auto m = run_virtual_measurement(d, presets::default_stylus(), p, 0.0, inst, grid, 1);
    return fit_stiffness(to_trace(m), 0.0, 1.0).k;
  };
  const double at_period = std::abs(slope(1e-6, 10e-6) / slope(0.0, 10e-6) - 1.0);
  const double off_period = std::abs(slope(1e-6, 3.7e-6) / slope(0.0, 3.7e-6) - 1.0);
  EXPECT_LT(at_period, 0.002);
  EXPECT_GT(off_period, at_period);
}

TEST(Series, ApparentStiffnessBelowDevice) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const double k = std::pow(10.0, u(rng));
    EXPECT_LT(series_stiffness(k, 4635.0), k);
  }
}

TEST(Seeds, DerivedSeedsAreDistinctAndStable) {
  EXPECT_EQ(derive_seed(1, 0), derive_seed(1, 0));
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(ApparatusStiffness, CyclicErrorDoesNotBiasSlopeAtAnyPhase) {
  for (double phase : {0.0, 0.7, 1.9, 3.1, 4.4, 5.6}) {
    InstrumentModel inst;
    inst.load_cell.noise_std_single = 0.0;
    inst.actuator.cyclic_phase = phase;
    const double k = estimate_apparatus_stiffness(inst, make_grid(5e-6, 30e-6, 0.5e-6), 1);
    EXPECT_NEAR(k, 4635.0, 1e-6 * 4635.0) << "phase " << phase;
  }
}

TEST(ApparatusStiffness, GridAtCyclicPeriodStillFits) {
  InstrumentModel inst;
  inst.load_cell.noise_std_single = 0.0;
  inst.actuator.cyclic_phase = 0.4;
  EXPECT_NEAR(estimate_apparatus_stiffness(inst, make_grid(5e-6, 45e-6, 10e-6), 1), 4635.0, 1e-9 * 4635.0);
  EXPECT_NEAR(estimate_apparatus_stiffness(inst, make_grid(5e-6, 45e-6, 5e-6), 1), 4635.0, 1e-9 * 4635.0);
}
