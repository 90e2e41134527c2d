#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "probestation/cli.hpp"
#include "probestation/units.hpp"

namespace ps = probestation;
namespace cli = probestation::cli;

int main(int argc, char** argv) {
  CLI::App app{"Virtual probe station: simulate, measure and analyse stylus force-deflection sweeps"};
  app.require_subcommand(1);
  int code = cli::exit_ok;

  cli::SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Noiseless quasi-static sweep: trace CSV, events JSON, optional SVG");
  c_sim->add_option("config", sim.config, "Run config (JSON)")->required();
  c_sim->add_option("-o,--out", sim.out, "Trace CSV path (default: output.trace)");
  c_sim->add_option("--events", sim.events, "Events JSON path (default: <out>.events.json)");
  c_sim->add_option("--plot", sim.plot, "SVG plot path");
  c_sim->callback([&] { code = cli::cmd_simulate(sim, std::cout, std::cerr); });

  cli::MeasureArgs meas;
  std::optional<std::uint64_t> meas_seed;
  double meas_err_um = 0.0;
  auto* c_meas = app.add_subcommand("measure", "Virtual measurement through the instrument error model");
  c_meas->add_option("config", meas.config, "Run config (JSON)")->required();
  c_meas->add_option("-o,--out", meas.out, "Trace CSV path (default: output.trace)");
  c_meas->add_option("--plot", meas.plot, "SVG plot path");
  c_meas->add_option("--seed", meas_seed, "Override the config seed");
  c_meas->add_option("--placement-error-um", meas_err_um, "Stylus placement error added to the config placement");
  c_meas->callback([&] {
    meas.seed = meas_seed;
    meas.placement_error = ps::units::um_to_m(meas_err_um);
    code = cli::cmd_measure(meas, std::cout, std::cerr);
  });

  cli::AnalyzeArgs an;
  double fit_lo_um = 5.0;
  double fit_hi_um = 50.0;
  std::optional<double> cal_bias;
  std::optional<std::string> k_app;
  auto* c_an = app.add_subcommand("analyze", "Fit, segment and correct a trace CSV; writes a JSON report");
  c_an->add_option("trace", an.trace, "Trace CSV")->required();
  c_an->add_option("-o,--report", an.report, "Report JSON path (default: stdout)");
  c_an->add_option("--plot", an.plot, "Annotated SVG plot path");
  c_an->add_option("--calibration-bias", cal_bias, "Divide forces by (1 + bias) before fitting");
  c_an->add_option("--apparatus-stiffness", k_app, "Remove a series apparatus stiffness [N/m] from the fit");
  c_an->add_option("--fit-lo-um", fit_lo_um, "Fit window start [um]");
  c_an->add_option("--fit-hi-um", fit_hi_um, "Fit window end [um]");
  c_an->callback([&] {
    an.calibration_bias = cal_bias;
    if (k_app) {
      if (*k_app == "inf") {
        an.apparatus_stiffness = std::numeric_limits<double>::infinity();
      } else {
        try {
          an.apparatus_stiffness = std::stod(*k_app);
        } catch (const std::exception&) {
          std::cerr << "error: --apparatus-stiffness: not a number: " << *k_app << '\n';
          code = cli::exit_config;
          return;
        }
      }
    }
    an.fit_lo = ps::units::um_to_m(fit_lo_um);
    an.fit_hi = ps::units::um_to_m(fit_hi_um);
    code = cli::cmd_analyze(an, std::cout, std::cerr);
  });

  cli::SweepPositionArgs sp;
  std::optional<double> c_s;
  auto* c_sp = app.add_subcommand("sweep-position", "Stiffness versus load position, analytic and measured");
  c_sp->add_option("config", sp.config, "Run config (JSON); `positions` lists load points along the mass")->required();
  c_sp->add_option("-o,--out", sp.out, "CSV path (default: output.csv)");
  c_sp->add_option("--plot", sp.plot, "SVG plot path");
  c_sp->add_option("--support-compliance", c_s, "Rotational support compliance [rad/(N m)] for the simulated device only");
  c_sp->callback([&] {
    sp.support_compliance = c_s;
    code = cli::cmd_sweep_position(sp, std::cout, std::cerr);
  });

  cli::HertzArgs hz;
  double force_mN = 0.0;
  double radius_um = 0.0;
  auto* c_hz = app.add_subcommand("hertz", "Hertz peak pressure and contact radius of the stylus tip");
  c_hz->add_option("--force-mN", force_mN, "Normal force [mN]")->required();
  c_hz->add_option("--radius-um", radius_um, "Tip radius [um]")->required();
  c_hz->add_option("--tip", hz.tip, "Tip material (diamond, silicon)");
  c_hz->add_option("--substrate", hz.substrate, "Substrate material (diamond, silicon)");
  c_hz->callback([&] {
    hz.force = force_mN * 1e-3;
    hz.radius = ps::units::um_to_m(radius_um);
    code = cli::cmd_hertz(hz, std::cout, std::cerr);
  });

  cli::MonteCarloArgs mc;
  double mc_std_um = 0.0;
  auto* c_mc = app.add_subcommand("montecarlo", "Sample-to-sample variation from placement scatter and noise");
  c_mc->add_option("config", mc.config, "Run config (JSON)")->required();
  c_mc->add_option("-n,--runs", mc.runs, "Number of samples");
  c_mc->add_option("--placement-error-std-um", mc_std_um, "Placement error standard deviation [um]");
  c_mc->add_option("-j,--jobs", mc.jobs, "Worker threads (0: hardware concurrency)");
  c_mc->add_option("-o,--out", mc.out, "Variation CSV path (default: output.csv)");
  c_mc->add_option("--report", mc.report, "Report JSON path (default: <out>.report.json)");
  c_mc->add_option("--plot", mc.plot, "SVG plot path");
  c_mc->callback([&] {
    mc.placement_error_std = ps::units::um_to_m(mc_std_um);
    code = cli::cmd_montecarlo(mc, std::cout, std::cerr);
  });

  cli::CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate-presets", "Recompute the shipped REF presets");
  c_cal->add_option("-o,--out-dir", cal.out_dir, "Directory for the preset JSON files");
  c_cal->callback([&] { code = cli::cmd_calibrate_presets(cal, std::cout, std::cerr); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::exit_ok : cli::exit_config;
  }
  return code;
}
