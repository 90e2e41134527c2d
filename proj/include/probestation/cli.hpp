#pragma once

// Command implementations behind the `probestation` executable. Each returns a process exit code:
// 0 success, 2 config/input error, 3 solver error, 4 analysis error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "probestation/analysis.hpp"
#include "probestation/config.hpp"
#include "probestation/contact.hpp"
#include "probestation/error.hpp"
#include "probestation/instrument.hpp"
#include "probestation/io/json_specs.hpp"
#include "probestation/io/svg.hpp"
#include "probestation/io/trace_csv.hpp"
#include "probestation/mechanics.hpp"
#include "probestation/presets.hpp"
#include "probestation/units.hpp"

namespace probestation::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_solver = 3, exit_analysis = 4 };

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const RangeError& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return exit_solver;
  } catch (const AnalysisError& e) {
    err << "analysis error: " << e.what() << '\n';
    return exit_analysis;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
}

namespace detail {

inline std::string pick(const std::string& flag, const std::string& from_config, const std::string& fallback = {}) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  return fallback;
}

/// Plots are best effort: a failure is reported but never changes the exit code.
inline void write_plot(const std::string& path, const io::Plot& plot, std::ostream& err) {
  if (path.empty()) return;
  try {
    io::write_file_atomic(path, io::render_svg(plot));
  } catch (const std::exception& e) {
    err << "warning: plot not written: " << e.what() << '\n';
  }
}

inline std::vector<double> to_um(const std::vector<double>& v) {
  std::vector<double> o;
  o.reserve(v.size());
  for (double x : v) o.push_back(units::m_to_um(x));
  return o;
}

inline std::vector<double> to_uN(const std::vector<double>& v) {
  std::vector<double> o;
  o.reserve(v.size());
  for (double x : v) o.push_back(units::N_to_uN(x));
  return o;
}

inline io::Plot force_plot(const std::string& title) {
  io::Plot p;
  p.title = title;
  p.x_label = "Deflection [um]";
  p.y_label = "Force [uN]";
  return p;
}

inline nlohmann::json point_json(const ForcePoint& p) {
  return {{"z_um", units::m_to_um(p.z)}, {"force_uN", units::N_to_uN(p.F)}};
}

inline MaterialProps named_material(const std::string& name) {
  if (name == "silicon") return materials::silicon();
  if (name == "diamond") return materials::diamond();
  throw ConfigError("unknown material '" + name + "' (known: silicon, diamond)");
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config;
  std::string out;     // trace CSV
  std::string events;  // events JSON, default <out>.events.json
  std::string plot;    // optional SVG
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_run_config(a.config);
    for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';
    const std::string trace_path = detail::pick(a.out, cfg.output.trace);
    if (trace_path.empty()) throw ConfigError("no output path: pass --out or set output.trace");
    const std::string events_path = detail::pick(a.events, cfg.output.events, trace_path + ".events.json");

    const SimTrace sim = run_sweep(cfg.device, cfg.stylus, cfg.placement, cfg.z_grid.values(), cfg.solver);
    const auto meta = run_meta(cfg, "simulation");
    io::write_file_atomic(trace_path, io::write_trace_string(io::to_trace_file(sim, meta)));
    io::write_file_atomic(events_path, io::events_to_json(sim, meta).dump(2) + "\n");

    const std::string plot_path = detail::pick(a.plot, cfg.output.plot);
    if (!plot_path.empty()) {
      const Trace t = to_trace(sim);
      auto plot = detail::force_plot("Force readout versus deflection (" + cfg.device.id + ")");
      plot.series.push_back({"F_z", detail::to_um(t.z), detail::to_uN(t.F)});
      for (const auto& e : sim.events)
        plot.markers.push_back({units::m_to_um(e.z_act), std::string(to_string(e.kind))});
      detail::write_plot(plot_path, plot, err);
    }
    out << "simulate: " << sim.states.size() << " points, " << sim.events.size() << " events -> " << trace_path
        << '\n';
    return int{exit_ok};
  });
}

// ---------------------------------------------------------------------------------------------
// measure

struct MeasureArgs {
  std::string config;
  std::string out;
  std::string plot;
  std::optional<std::uint64_t> seed;
  double placement_error = 0.0;  // m
};

inline int cmd_measure(const MeasureArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_run_config(a.config);
    for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';
    const std::string trace_path = detail::pick(a.out, cfg.output.trace);
    if (trace_path.empty()) throw ConfigError("no output path: pass --out or set output.trace");
    const std::uint64_t seed = a.seed.value_or(cfg.seed);

    const MeasurementTrace m = run_virtual_measurement(cfg.device, cfg.stylus, cfg.placement, a.placement_error,
                                                       cfg.instrument, cfg.z_grid.values(), seed, cfg.solver);
    auto meta = run_meta(cfg, "measurement");
    meta["seed"] = seed;
    meta["placement_error_um"] = units::m_to_um(a.placement_error);
    meta["fractured"] = m.fractured;
    io::write_file_atomic(trace_path, io::write_trace_string(io::to_trace_file(m, meta)));

    const std::string plot_path = detail::pick(a.plot, cfg.output.plot);
    if (!plot_path.empty()) {
      const Trace t = to_trace(m);
      auto plot = detail::force_plot("Measured force versus commanded position (" + cfg.device.id + ")");
      plot.series.push_back({"readout", detail::to_um(t.z), detail::to_uN(t.F)});
      detail::write_plot(plot_path, plot, err);
    }
    out << "measure: " << m.records.size() << " points" << (m.fractured ? " (fractured)" : "") << " -> "
        << trace_path << '\n';
    return int{exit_ok};
  });
}

// ---------------------------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string trace;
  std::string report;  // empty: print to stdout
  std::string plot;
  std::optional<double> calibration_bias;
  std::optional<double> apparatus_stiffness;  // N/m
  double fit_lo = 5e-6;                       // m
  double fit_hi = 50e-6;                      // m
};

inline nlohmann::json segmentation_json(const Trace& t, const RegimeSegmentation& seg) {
  nlohmann::json spans = nlohmann::json::array();
  std::size_t start = 0;
  for (std::size_t i = 1; i <= seg.labels.size(); ++i) {
    if (i == seg.labels.size() || seg.labels[i] != seg.labels[start]) {
      spans.push_back({{"regime", std::string(to_string(seg.labels[start]))},
                       {"z_start_um", units::m_to_um(t.z[start])},
                       {"z_end_um", units::m_to_um(t.z[i - 1])},
                       {"points", i - start}});
      start = i;
    }
  }
  nlohmann::json j = {{"regimes", spans},
                      {"linear_end_um", units::m_to_um(seg.linear_end_z)},
                      {"low_z_slope_N_per_m", seg.low_z_slope},
                      {"fz_max", detail::point_json(seg.fz_max)},
                      {"contact_start_um", nullptr},
                      {"slide_off_bump", nullptr},
                      {"fracture", nullptr}};
  if (seg.contact_start_z) j["contact_start_um"] = units::m_to_um(*seg.contact_start_z);
  if (seg.slide_off_bump) j["slide_off_bump"] = detail::point_json(*seg.slide_off_bump);
  if (seg.fracture) j["fracture"] = detail::point_json(*seg.fracture);
  return j;
}

inline int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!(a.fit_hi > a.fit_lo)) throw ConfigError("fit window: hi must be > lo");
    io::TraceReadResult rr;
    try {
      rr = io::read_trace_string(io::read_file(a.trace));
    } catch (const ConfigError& e) {
      throw ConfigError(a.trace + ": " + e.what());
    }
    std::vector<std::string> warnings = rr.warnings;
    for (const auto& w : warnings) err << "warning: " << w << '\n';

    Trace t = io::to_trace(rr.file, a.trace);
    validate(t);
    if (a.calibration_bias) {
      for (auto& f : t.F) f = correct_calibration(f, *a.calibration_bias);
      if (t.std)
        for (auto& s : *t.std) s = correct_calibration(s, *a.calibration_bias);
    }
    if (a.apparatus_stiffness && !(*a.apparatus_stiffness > 0.0))
      throw ConfigError("--apparatus-stiffness must be > 0");

    std::optional<RegimeSegmentation> seg;
    if (t.size() >= 10) {
      seg = segment_regimes(t);
    } else {
      warnings.push_back("fewer than 10 points: regime segmentation skipped");
    }

    StiffnessFit fit;
    try {
      fit = fit_stiffness(t, a.fit_lo, a.fit_hi);
    } catch (const AnalysisError&) {
      if (!seg) throw;
      warnings.push_back("fit window not covered by the trace; fitted over the linear regime instead");
      fit = fit_stiffness(t, std::numeric_limits<double>::min(), seg->linear_end_z);
    }
    double k_device = fit.k;
    if (a.apparatus_stiffness) {
      try {
        k_device = correct_compliance(fit.k, *a.apparatus_stiffness);
      } catch (const DomainError& e) {
        throw AnalysisError(std::string("compliance correction: ") + e.what());
      }
    }

    nlohmann::json events = nlohmann::json::array();
    if (seg) {
      events.push_back({{"kind", "LinearEnd"}, {"z_um", units::m_to_um(seg->linear_end_z)}});
      events.push_back({{"kind", "ForceMaximum"}, {"z_um", units::m_to_um(seg->fz_max.z)},
                        {"force_uN", units::N_to_uN(seg->fz_max.F)}});
      if (seg->slide_off_bump)
        events.push_back({{"kind", "SlideOffBump"}, {"z_um", units::m_to_um(seg->slide_off_bump->z)},
                          {"force_uN", units::N_to_uN(seg->slide_off_bump->F)}});
      if (seg->contact_start_z) events.push_back({{"kind", "ContactOnset"}, {"z_um", units::m_to_um(*seg->contact_start_z)}});
      if (seg->fracture)
        events.push_back({{"kind", "Fracture"}, {"z_um", units::m_to_um(seg->fracture->z)},
                          {"force_uN", units::N_to_uN(seg->fracture->F)}});
    }

    nlohmann::json corrections = {{"calibration_bias", nullptr}, {"apparatus_stiffness_N_per_m", nullptr}};
    if (a.calibration_bias) corrections["calibration_bias"] = *a.calibration_bias;
    if (a.apparatus_stiffness) corrections["apparatus_stiffness_N_per_m"] = io::detail::stiffness_json(*a.apparatus_stiffness);

    nlohmann::json report = {
        {"format", "stylus-analysis v1"},
        {"input", a.trace},
        {"meta", rr.file.meta},
        {"points", t.size()},
        {"corrections", corrections},
        {"fit",
         {{"k_N_per_m", fit.k},
          {"intercept_uN", units::N_to_uN(fit.intercept)},
          {"z_lo_um", units::m_to_um(fit.z_lo)},
          {"z_hi_um", units::m_to_um(fit.z_hi)},
          {"residual_std_uN", units::N_to_uN(fit.residual_std)},
          {"k_stderr_N_per_m", fit.k_stderr},
          {"points", fit.count}}},
        {"device_stiffness_N_per_m", k_device},
        {"segmentation", seg ? segmentation_json(t, *seg) : nlohmann::json(nullptr)},
        {"events", events},
        {"sensitivity", nullptr},
        {"variation", nullptr},
        {"warnings", warnings}};

    const std::string text = report.dump(2) + "\n";
    if (a.report.empty()) {
      out << text;
    } else {
      io::write_file_atomic(a.report, text);
    }

    if (!a.plot.empty()) {
      auto plot = detail::force_plot("Force versus deflection, analysed");
      plot.series.push_back({"trace", detail::to_um(t.z), detail::to_uN(t.F)});
      std::vector<double> fz;
      std::vector<double> ff;
      for (double zz : t.z) {
        if (zz >= fit.z_lo && zz <= fit.z_hi) {
          fz.push_back(units::m_to_um(zz));
          ff.push_back(units::N_to_uN(fit.k * zz + fit.intercept));
        }
      }
      plot.series.push_back({"linear fit", fz, ff, "#d62728"});
      for (const auto& e : events) plot.markers.push_back({e.at("z_um").get<double>(), e.at("kind").get<std::string>()});
      detail::write_plot(a.plot, plot, err);
    }
    return int{exit_ok};
  });
}

// ---------------------------------------------------------------------------------------------
// sweep-position

struct SweepPositionArgs {
  std::string config;
  std::string out;  // CSV
  std::string plot;
  std::optional<double> support_compliance;  // rad/(N m), applied to the simulated device only
};

inline constexpr const char* position_csv_magic = "# stylus-position-sweep v1";
inline constexpr const char* position_csv_columns =
    "d_um,position_from_support_um,k_analytic_N_per_m,k_measured_N_per_m";

struct PositionRow {
  double d = 0.0;           // m, from the beam tip along the mass
  double k_analytic = 0.0;  // N/m
  double k_measured = 0.0;  // N/m, corrected for the known calibration bias and apparatus stiffness
};

inline std::vector<PositionRow> sweep_position(const RunConfig& cfg, std::optional<double> support_compliance) {
  std::vector<double> positions = cfg.positions;
  if (positions.empty()) {
    for (int i = 1; i <= 9; ++i) positions.push_back(cfg.device.mass.length * i / 10.0);
  }
  DeviceSpec simulated = cfg.device;
  if (support_compliance) {
    if (!(*support_compliance >= 0.0)) throw ConfigError("--support-compliance must be >= 0");
    simulated.support_rot_compliance = *support_compliance;
  }
  const double step = std::min(cfg.z_grid.step, (cfg.fit_hi - cfg.fit_lo) / 10.0);
  const auto grid = make_grid(0.0, cfg.fit_hi, step);
  const double bias = cfg.instrument.load_cell.calibration_bias;
  const double k_app = cfg.instrument.apparatus.stiffness;

  std::vector<PositionRow> rows;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    PositionRow r;
    r.d = positions[i];
    r.k_analytic = linear_stiffness_at(cfg.device, r.d);
    const auto m = run_virtual_measurement(simulated, cfg.stylus, {r.d}, 0.0, cfg.instrument, grid,
                                           derive_seed(cfg.seed, i), cfg.solver);
    const StiffnessFit fit = fit_stiffness(to_trace(m), cfg.fit_lo, cfg.fit_hi);
    double k = fit.k / (1.0 + bias);
    if (std::isfinite(k_app)) k = correct_compliance(k, k_app);
    r.k_measured = k;
    rows.push_back(r);
  }
  return rows;
}

inline int cmd_sweep_position(const SweepPositionArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_run_config(a.config);
    for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';
    const std::string csv_path = detail::pick(a.out, cfg.output.csv);
    if (csv_path.empty()) throw ConfigError("no output path: pass --out or set output.csv");

    const auto rows = sweep_position(cfg, a.support_compliance);
    auto meta = run_meta(cfg, "position-sweep");
    meta["support_rot_compliance_simulated"] =
        a.support_compliance.value_or(cfg.device.support_rot_compliance);
    std::string text = std::string(position_csv_magic) + "\n# meta: " + meta.dump() + "\n" + position_csv_columns + "\n";
    for (const auto& r : rows) {
      text += io::format_number(units::m_to_um(r.d)) + "," +
              io::format_number(units::m_to_um(cfg.device.beam.length + r.d)) + "," +
              io::format_number(r.k_analytic) + "," + io::format_number(r.k_measured) + "\n";
    }
    io::write_file_atomic(csv_path, text);

    const std::string plot_path = detail::pick(a.plot, cfg.output.plot);
    if (!plot_path.empty()) {
      io::Plot plot;
      plot.title = "Spring constant versus position along proof mass";
      plot.x_label = "Position from support [um]";
      plot.y_label = "Spring constant [N/m]";
      io::PlotSeries an{"analytic", {}, {}, "#1f77b4"};
      io::PlotSeries me{"measured", {}, {}, "#d62728", true};
      for (const auto& r : rows) {
        const double x = units::m_to_um(cfg.device.beam.length + r.d);
        an.x.push_back(x);
        an.y.push_back(r.k_analytic);
        me.x.push_back(x);
        me.y.push_back(r.k_measured);
      }
      plot.series = {an, me};
      detail::write_plot(plot_path, plot, err);
    }
    out << "sweep-position: " << rows.size() << " positions -> " << csv_path << '\n';
    return int{exit_ok};
  });
}

// ---------------------------------------------------------------------------------------------
// hertz

struct HertzArgs {
  double force = 0.0;   // N
  double radius = 0.0;  // m
  std::string tip = "diamond";
  std::string substrate = "silicon";
};

inline std::string format_sig(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline int cmd_hertz(const HertzArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const MaterialProps tip = detail::named_material(a.tip);
    const MaterialProps sub = detail::named_material(a.substrate);
    const double p0 = hertz_peak_pressure(a.force, a.radius, tip, sub);
    const double r = hertz_contact_radius(a.force, a.radius, tip, sub);
    out << "peak_pressure_Pa " << format_sig(p0) << '\n';
    out << "contact_radius_m " << format_sig(r) << '\n';
    return int{exit_ok};
  });
}

// ---------------------------------------------------------------------------------------------
// montecarlo

struct MonteCarloArgs {
  std::string config;
  int runs = 6;
  double placement_error_std = 0.0;  // m
  int jobs = 0;                      // 0: one per hardware thread
  std::string out;                   // variation CSV
  std::string report;                // VariationReport JSON
  std::string plot;
};

struct MonteCarloRun {
  std::uint64_t seed = 0;
  double placement_error = 0.0;
  MeasurementTrace trace;
};

struct MonteCarloResult {
  std::vector<MonteCarloRun> runs;
  VariationReport report;
  double placement_halfwidth = 0.0;  // m
  double placement_band = 0.0;       // N, readout units
  double noise_allowance = 0.0;      // N
  double z_cut = 0.0;                // m, comparison span ends here
};

/// First depth at which a sweep at x_s leaves sliding contact.
inline double sliding_limit(const RunConfig& cfg, double x_s) {
  const ContactModel model(cfg.device, cfg.stylus, {x_s}, cfg.solver);
  const auto& tr = model.transitions();
  return tr.slide_off_z ? std::min(*tr.slide_off_z, tr.flank_z) : tr.flank_z;
}

/// Placement errors are uniform with the given standard deviation (half-width sqrt(3) std), so
/// every sample lies inside the band [-a, a] that defines the envelope.
inline MonteCarloResult run_montecarlo(const RunConfig& cfg, int n_runs, double placement_error_std, int jobs) {
  if (n_runs < 1) throw ConfigError("--runs must be >= 1");
  if (!(placement_error_std >= 0.0)) throw ConfigError("placement error std must be >= 0");
  MonteCarloResult res;
  const double a = std::sqrt(3.0) * placement_error_std;
  res.placement_halfwidth = a;
  const double x0 = cfg.placement.x_s;
  if (x0 - a < 0.0 || x0 + a > cfg.device.mass.length)
    throw ConfigError("placement scatter reaches past the proof mass");

  const auto grid = cfg.z_grid.values();
  res.runs.resize(static_cast<std::size_t>(n_runs));
  std::vector<std::exception_ptr> errors(res.runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < res.runs.size(); i = next++) {
      try {
        auto& run = res.runs[i];
        Rng rng(derive_seed(cfg.seed, i));
        std::uniform_real_distribution<double> place(-a, a);
        run.placement_error = a > 0.0 ? place(rng) : 0.0;
        run.seed = rng();
        run.trace = run_virtual_measurement(cfg.device, cfg.stylus, cfg.placement, run.placement_error, cfg.instrument,
                                            grid, run.seed, cfg.solver);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n_workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(n_runs));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  // compare only where every placement in the band is still sliding on the top surface
  res.z_cut = std::min({sliding_limit(cfg, x0 - a), sliding_limit(cfg, x0), sliding_limit(cfg, x0 + a),
                        cfg.z_grid.stop}) -
              cfg.instrument.actuator.cyclic_amplitude;
  std::vector<double> band_grid;
  for (double z : grid)
    if (z <= res.z_cut) band_grid.push_back(z);
  const double bias = cfg.instrument.load_cell.calibration_bias;
  res.placement_band =
      a > 0.0 ? (1.0 + bias) * placement_band(cfg.device, cfg.stylus, x0, a, band_grid, cfg.solver) : 0.0;
  res.noise_allowance = 3.0 * std::sqrt(2.0) * cfg.instrument.load_cell.estimator_std();
  const double envelope = res.placement_band + res.noise_allowance;

  std::vector<Trace> traces;
  for (const auto& r : res.runs) traces.push_back(truncate(to_trace(r.trace), res.z_cut));
  if (traces.size() == 1) {
    res.report.envelope = envelope;
    res.report.z_lo = traces[0].z.front();
    res.report.z_hi = traces[0].z.back();
    res.report.fits.push_back(fit_stiffness(traces[0], 5e-6, 50e-6));
  } else {
    res.report = compare_samples(traces, envelope);
  }
  return res;
}

inline int cmd_montecarlo(const MonteCarloArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_run_config(a.config);
    for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';
    const std::string csv_path = detail::pick(a.out, cfg.output.csv);
    if (csv_path.empty()) throw ConfigError("no output path: pass --out or set output.csv");
    const std::string report_path = detail::pick(a.report, cfg.output.report, csv_path + ".report.json");

    const MonteCarloResult res = run_montecarlo(cfg, a.runs, a.placement_error_std, a.jobs);

    auto meta = run_meta(cfg, "montecarlo");
    meta["runs"] = a.runs;
    meta["placement_error_std_um"] = units::m_to_um(a.placement_error_std);
    std::string text = "# stylus-variation v1\n# meta: " + meta.dump() +
                       "\nrun,seed,placement_error_um,z_cmd_um,force_uN,force_std_uN\n";
    for (std::size_t i = 0; i < res.runs.size(); ++i) {
      const auto& r = res.runs[i];
      for (const auto& rec : r.trace.records) {
        text += std::to_string(i) + "," + std::to_string(r.seed) + "," +
                io::format_number(units::m_to_um(r.placement_error)) + "," +
                io::format_number(units::m_to_um(rec.z_cmd)) + "," + io::format_number(units::N_to_uN(rec.F_readout)) +
                "," + io::format_number(units::N_to_uN(rec.F_readout_std)) + "\n";
      }
    }
    io::write_file_atomic(csv_path, text);

    nlohmann::json fits = nlohmann::json::array();
    for (std::size_t i = 0; i < res.report.fits.size(); ++i) {
      fits.push_back({{"run", i},
                      {"seed", res.runs[i].seed},
                      {"placement_error_um", units::m_to_um(res.runs[i].placement_error)},
                      {"k_N_per_m", res.report.fits[i].k}});
    }
    const nlohmann::json report = {{"format", "stylus-variation-report v1"},
                                   {"meta", meta},
                                   {"runs", a.runs},
                                   {"placement_halfwidth_um", units::m_to_um(res.placement_halfwidth)},
                                   {"z_lo_um", units::m_to_um(res.report.z_lo)},
                                   {"z_hi_um", units::m_to_um(res.report.z_hi)},
                                   {"fits", fits},
                                   {"max_deviation_uN", units::N_to_uN(res.report.max_deviation)},
                                   {"placement_band_uN", units::N_to_uN(res.placement_band)},
                                   {"noise_allowance_uN", units::N_to_uN(res.noise_allowance)},
                                   {"envelope_uN", units::N_to_uN(res.report.envelope)},
                                   {"within_envelope", res.report.within_envelope}};
    io::write_file_atomic(report_path, report.dump(2) + "\n");

    const std::string plot_path = detail::pick(a.plot, cfg.output.plot);
    if (!plot_path.empty()) {
      auto plot = detail::force_plot("Sample to sample variations");
      const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
      for (std::size_t i = 0; i < res.runs.size(); ++i) {
        const Trace t = to_trace(res.runs[i].trace);
        plot.series.push_back({"sample " + std::to_string(i + 1), detail::to_um(t.z), detail::to_uN(t.F),
                               colors[i % 6]});
      }
      detail::write_plot(plot_path, plot, err);
    }
    out << "montecarlo: " << a.runs << " runs, max deviation " << units::N_to_uN(res.report.max_deviation)
        << " uN, envelope " << units::N_to_uN(res.report.envelope) << " uN, "
        << (res.report.within_envelope ? "within" : "OUTSIDE") << " envelope\n";
    return int{exit_ok};
  });
}

// ---------------------------------------------------------------------------------------------
// calibrate-presets

struct CalibrateArgs {
  std::string out_dir = PROBESTATION_PRESET_DIR;
};

inline int cmd_calibrate_presets(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::filesystem::create_directories(a.out_dir);
    for (const DeviceSpec& d : {presets::calibrate_ref_cantilever(), presets::calibrate_ref_stiff()}) {
      const auto path = std::filesystem::path(a.out_dir) / preset_file_name(d.id);
      io::write_file_atomic(path, io::to_json(d).dump(2) + "\n");
      out << d.id << ": thickness " << units::m_to_um(d.beam.thickness) << " um, fracture strength "
          << d.material.fracture_strength << " Pa -> " << path.string() << '\n';
    }
    return int{exit_ok};
  });
}

}  // namespace probestation::cli
