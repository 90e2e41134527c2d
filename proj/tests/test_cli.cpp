#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "probestation/cli.hpp"

using namespace probestation;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = PROBESTATION_SOURCE_DIR;
const fs::path test_dir = PROBESTATION_TEST_DIR;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "probestation_test_cli";
  fs::create_directories(dir);
  return dir / name;
}

/// Run the installed binary; returns its exit status.
int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PROBESTATION_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const auto p = scratch(name);
  io::write_file_atomic(p, body);
  return p;
}

std::string ideal_instrument() {
  return R"("instrument": {"load_cell": {"noise_std_single": 0, "calibration_bias": 0},
                           "actuator": {"cyclic_amplitude": 0}, "apparatus": {"stiffness": "inf"}})";
}

cli::AnalyzeArgs analyze_args(const fs::path& trace, const fs::path& report = {}, const fs::path& plot = {}) {
  cli::AnalyzeArgs a;
  a.trace = trace.string();
  a.report = report.string();
  a.plot = plot.string();
  return a;
}

nlohmann::json analyze_json(const cli::AnalyzeArgs& a, int expect = cli::exit_ok) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_analyze(a, out, err), expect) << err.str();
  if (expect != cli::exit_ok) return {};
  return nlohmann::json::parse(out.str());
}

fs::path write_linear_trace(const std::string& name, double k, std::size_t n, double dz_um) {
  io::TraceFile tf;
  for (std::size_t i = 0; i < n; ++i) {
    io::TraceRow r;
    r.z_cmd_um = dz_um * static_cast<double>(i);
    r.z_dut_um = r.z_cmd_um;
    r.force_uN = k * r.z_cmd_um;  // N/m * um = uN
    tf.rows.push_back(r);
  }
  const auto p = scratch(name);
  io::write_file_atomic(p, io::write_trace_string(tf));
  return p;
}

}  // namespace

TEST(Simulate, GoldenTrace) {
  const auto out = scratch("golden.csv");
  std::ostringstream o, e;
  ASSERT_EQ(cli::cmd_simulate({(test_dir / "data/golden-ref-cosym.json").string(), out.string(), "", ""}, o, e),
            cli::exit_ok)
      << e.str();
  EXPECT_EQ(io::read_file(out), io::read_file(test_dir / "golden/ref-cosym.csv"));
  auto ev = out;
  ev += ".events.json";
  EXPECT_EQ(io::read_file(ev), io::read_file(test_dir / "golden/ref-cosym.events.json"));
}

TEST(Simulate, DeterministicAndAnalyzableWithoutWarnings) {
  const auto cfg = (test_dir / "data/golden-ref-cosym.json").string();
  const auto a = scratch("det_a.csv");
  const auto b = scratch("det_b.csv");
  const auto plot = scratch("det.svg");
  std::ostringstream o, e;
  ASSERT_EQ(cli::cmd_simulate({cfg, a.string(), "", plot.string()}, o, e), cli::exit_ok);
  ASSERT_EQ(cli::cmd_simulate({cfg, b.string(), "", ""}, o, e), cli::exit_ok);
  EXPECT_EQ(io::read_file(a), io::read_file(b));
  EXPECT_NE(io::read_file(plot).find("</svg>"), std::string::npos);
  EXPECT_TRUE(io::read_trace_string(io::read_file(a)).warnings.empty());

  const auto rep = analyze_json(analyze_args(a));
  EXPECT_TRUE(rep.at("warnings").empty()) << rep.at("warnings").dump();
  const auto& regs = rep.at("segmentation").at("regimes");
  ASSERT_EQ(regs.size(), 3u);
  EXPECT_EQ(regs[0].at("regime"), "linear");
  EXPECT_EQ(regs[1].at("regime"), "geometric");
  EXPECT_EQ(regs[2].at("regime"), "contact");
}

TEST(Simulate, ConfigIsNotModified) {
  const auto cfg = write_config("untouched.json", io::read_file(test_dir / "data/golden-ref-cosym.json"));
  const auto before = io::read_file(cfg);
  std::ostringstream o, e;
  ASSERT_EQ(cli::cmd_simulate({cfg.string(), scratch("untouched.csv").string(), "", ""}, o, e), cli::exit_ok);
  EXPECT_EQ(io::read_file(cfg), before);
}

TEST(ExitCodes, Binary) {
  const auto good = (test_dir / "data/golden-ref-cosym.json").string();
  EXPECT_EQ(run_cli("simulate " + good + " -o " + scratch("bin.csv").string()), 0);
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("simulate"), 2);
  EXPECT_EQ(run_cli("no-such-command"), 2);
  EXPECT_EQ(run_cli("simulate " + good + " --no-such-flag"), 2);
  EXPECT_EQ(run_cli("simulate " + scratch("missing.json").string() + " -o x.csv"), 2);

  const auto bad_json = write_config("bad.json", "{\"device\": \"REF-CANTILEVER\",, }");
  EXPECT_EQ(run_cli("simulate " + bad_json.string() + " -o " + scratch("x.csv").string()), 2);
  const auto bad_field = write_config(
      "bad_field.json", R"({"device": "REF-CANTILEVER", "z_grid": {"stop": 1e-4, "step": -1e-6}})");
  EXPECT_EQ(run_cli("simulate " + bad_field.string() + " -o " + scratch("x.csv").string()), 2);
  const auto unknown_preset =
      write_config("unknown_preset.json", R"({"device": "REF-NOPE", "z_grid": {"stop": 1e-4, "step": 1e-6}})");
  EXPECT_EQ(run_cli("simulate " + unknown_preset.string() + " -o " + scratch("x.csv").string()), 2);

  const auto stuck = write_config(
      "stuck.json",
      R"({"device": "REF-CANTILEVER", "solver": {"max_iterations": 1}, "z_grid": {"stop": 1.3e-3, "step": 50e-6}})");
  EXPECT_EQ(run_cli("simulate " + stuck.string() + " -o " + scratch("stuck.csv").string()), 3);

  const auto tiny = write_linear_trace("tiny.csv", 10.0, 2, 1.0);
  EXPECT_EQ(run_cli("analyze " + tiny.string()), 4);
  EXPECT_EQ(run_cli("hertz --force-mN -1 --radius-um 10"), 2);
  EXPECT_EQ(run_cli("hertz --force-mN 10 --radius-um 10 --tip unobtainium"), 2);
}

TEST(ExitCodes, PlotFailureDoesNotChangeExitCode) {
  std::ostringstream o, e;
  EXPECT_EQ(cli::cmd_simulate({(test_dir / "data/golden-ref-cosym.json").string(), scratch("p.csv").string(), "",
                               (scratch("no_dir") / "a" / "b.svg").string()},
                              o, e),
            cli::exit_ok);
  EXPECT_NE(e.str().find("warning"), std::string::npos);
}

TEST(Measure, IdealInstrumentMatchesSimulation) {
  const auto cfg = write_config("ideal.json", R"({"device": "REF-CANTILEVER", )" + ideal_instrument() +
                                                  R"(, "z_grid": {"stop": 1.3e-3, "step": 5e-6}})");
  const auto sim = scratch("ideal_sim.csv");
  const auto mea = scratch("ideal_mea.csv");
  std::ostringstream o, e;
  ASSERT_EQ(cli::cmd_simulate({cfg.string(), sim.string(), "", ""}, o, e), cli::exit_ok);
  ASSERT_EQ(cli::cmd_measure({cfg.string(), mea.string(), "", std::nullopt, 0.0}, o, e), cli::exit_ok) << e.str();
  const auto a = io::read_trace_string(io::read_file(sim)).file;
  const auto b = io::read_trace_string(io::read_file(mea)).file;
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_NEAR(b.rows[i].z_cmd_um, a.rows[i].z_cmd_um, 1e-9);
    EXPECT_NEAR(b.rows[i].force_uN, a.rows[i].force_uN, 1e-9 * std::abs(a.rows[i].force_uN)) << "row " << i;
  }
}

TEST(Measure, SeedsChangeForcesNotPositions) {
  const auto cfg = write_config("seeds.json", R"({"device": "REF-CANTILEVER", "z_grid": {"stop": 100e-6, "step": 2e-6}})");
  const auto a = scratch("seed_a.csv");
  const auto b = scratch("seed_b.csv");
  const auto c = scratch("seed_c.csv");
  std::ostringstream o, e;
  ASSERT_EQ(cli::cmd_measure({cfg.string(), a.string(), "", 1u, 0.0}, o, e), cli::exit_ok);
  ASSERT_EQ(cli::cmd_measure({cfg.string(), b.string(), "", 2u, 0.0}, o, e), cli::exit_ok);
  ASSERT_EQ(cli::cmd_measure({cfg.string(), c.string(), "", 1u, 0.0}, o, e), cli::exit_ok);
  EXPECT_EQ(io::read_file(a), io::read_file(c));
  const auto ta = io::read_trace_string(io::read_file(a)).file;
  const auto tb = io::read_trace_string(io::read_file(b)).file;
  ASSERT_EQ(ta.rows.size(), tb.rows.size());
  std::size_t differ = 0;
  for (std::size_t i = 0; i < ta.rows.size(); ++i) {
    EXPECT_EQ(ta.rows[i].z_cmd_um, tb.rows[i].z_cmd_um);
    differ += ta.rows[i].force_uN != tb.rows[i].force_uN ? 1 : 0;
  }
  EXPECT_GT(differ, ta.rows.size() / 2);
}

TEST(Measure, HundredSeedScatterMatchesDeclaredStd) {
  const auto cfg = load_run_config(
      write_config("scatter.json", R"({"device": "REF-CANTILEVER", "z_grid": {"stop": 40e-6, "step": 4e-6}})"));
  const auto grid = cfg.z_grid.values();
  std::vector<std::vector<double>> per_row(grid.size());
  double declared = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto m = run_virtual_measurement(cfg.device, cfg.stylus, cfg.placement, 0.0, cfg.instrument, grid, 1000 + s);
    for (std::size_t i = 0; i < m.records.size(); ++i) per_row[i].push_back(m.records[i].F_readout);
    declared = m.records[0].F_readout_std;
  }
  for (std::size_t i = 0; i < per_row.size(); ++i) {
    const double sd = sample_std(per_row[i]);
    EXPECT_GT(sd, 0.85 * declared) << "row " << i;
    EXPECT_LT(sd, 1.15 * declared) << "row " << i;
  }
}

TEST(Analyze, PureLinearSlopeExact) {
  const auto p = write_linear_trace("linear.csv", 12.5, 301, 1.0);
  const auto rep = analyze_json(analyze_args(p));
  EXPECT_NEAR(rep.at("fit").at("k_N_per_m").get<double>(), 12.5, 1e-9 * 12.5);
  EXPECT_EQ(rep.at("format"), "stylus-analysis v1");
}

TEST(Analyze, ApparatusCorrectionRecoversDevice) {
  const double k = 10.0;
  const double series = 1.0 / (1.0 / k + 1.0 / 4635.0);
  const auto p = write_linear_trace("series.csv", series, 101, 1.0);
  auto a = analyze_args(p);
  a.apparatus_stiffness = 4635.0;
  const auto rep = analyze_json(a);
  EXPECT_NEAR(rep.at("device_stiffness_N_per_m").get<double>(), k, 1e-3 * k);
  a.apparatus_stiffness = 5.0;
  analyze_json(a, cli::exit_analysis);
}

TEST(Analyze, CalibrationBiasApplied) {
  const auto p = write_linear_trace("biased.csv", 10.25, 101, 1.0);
  auto a = analyze_args(p);
  a.calibration_bias = 0.025;
  const auto rep = analyze_json(a);
  EXPECT_NEAR(rep.at("device_stiffness_N_per_m").get<double>(), 10.0, 1e-9 * 10.0);
}

TEST(Analyze, MalformedCsvNamesRow) {
  const auto p = scratch("malformed.csv");
  io::write_file_atomic(p, "# stylus-trace v1\n# meta: {}\nz_cmd_um,z_dut_um,force_uN,force_std_uN,mode\n0,0,0,,\n1,1,abc,,\n");
  std::ostringstream o, e;
  EXPECT_EQ(cli::cmd_analyze(analyze_args(p), o, e), cli::exit_config);
  EXPECT_NE(e.str().find("row 5"), std::string::npos) << e.str();
}

TEST(Analyze, ReportFileAndPlot) {
  const auto trace = scratch("rep_trace.csv");
  std::ostringstream o, e;
  ASSERT_EQ(cli::cmd_simulate({(test_dir / "data/golden-ref-cosym.json").string(), trace.string(), "", ""}, o, e),
            cli::exit_ok);
  const auto report = scratch("rep.json");
  const auto plot = scratch("rep.svg");
  const auto a = analyze_args(trace, report, plot);
  ASSERT_EQ(cli::cmd_analyze(a, o, e), cli::exit_ok) << e.str();
  const auto j = nlohmann::json::parse(io::read_file(report));
  for (const char* key : {"fit", "segmentation", "events", "corrections", "sensitivity", "variation", "warnings"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_NE(io::read_file(plot).find("</svg>"), std::string::npos);
}

TEST(SweepPosition, ColumnsBehave) {
  const auto cfg = write_config("positions.json", R"({"device": "REF-CANTILEVER", )" + ideal_instrument() +
                                                      R"(, "z_grid": {"stop": 60e-6, "step": 1e-6}})");
  const auto rc = load_run_config(cfg);
  const auto rows = cli::sweep_position(rc, std::nullopt);
  ASSERT_GE(rows.size(), 5u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(rows[i].k_measured, rows[i].k_analytic, 0.03 * rows[i].k_analytic);
    if (i > 0) {
      EXPECT_LT(rows[i].k_analytic, rows[i - 1].k_analytic);
    }
  }
  for (const auto& r : cli::sweep_position(rc, presets::support_compliance_example))
    EXPECT_LT(r.k_measured, r.k_analytic) << "d = " << r.d;

  const auto out = scratch("positions.csv");
  std::ostringstream o, e;
  ASSERT_EQ(cli::cmd_sweep_position({cfg.string(), out.string(), scratch("positions.svg").string(), std::nullopt}, o, e),
            cli::exit_ok);
  const auto text = io::read_file(out);
  EXPECT_EQ(text.rfind(cli::position_csv_magic, 0), 0u);
  EXPECT_NE(text.find(cli::position_csv_columns), std::string::npos);
}

TEST(SweepPosition, DefaultInstrumentIsCorrected) {
  const auto cfg = load_run_config(source_dir / "configs/ref-positions.json");
  for (const auto& r : cli::sweep_position(cfg, std::nullopt))
    EXPECT_NEAR(r.k_measured, r.k_analytic, 0.03 * r.k_analytic) << "d = " << r.d;
}

TEST(Hertz, Outputs) {
  std::ostringstream o, e;
  ASSERT_EQ(cli::cmd_hertz({0.0, 10e-6}, o, e), cli::exit_ok);
  EXPECT_EQ(o.str(), "peak_pressure_Pa 0\ncontact_radius_m 0\n");

  std::ostringstream o2;
  ASSERT_EQ(cli::cmd_hertz({10e-3, 10e-6}, o2, e), cli::exit_ok);
  std::istringstream in(o2.str());
  std::string key;
  double p0 = 0.0;
  in >> key >> p0;
  EXPECT_EQ(key, "peak_pressure_Pa");
  EXPECT_GE(p0, 2e9);
  EXPECT_LE(p0, 10e9);
  const double lib = hertz_peak_pressure(10e-3, 10e-6, materials::diamond(), materials::silicon());
  EXPECT_EQ(o2.str().substr(0, o2.str().find('\n')), "peak_pressure_Pa " + cli::format_sig(lib));
}

TEST(MonteCarlo, SingleRunIsTrivial) {
  const auto cfg = load_run_config(source_dir / "configs/ref-montecarlo.json");
  const auto r = cli::run_montecarlo(cfg, 1, 10e-6, 1);
  EXPECT_EQ(r.report.max_deviation, 0.0);
  EXPECT_TRUE(r.report.within_envelope);
}

TEST(MonteCarlo, NoScatterNoNoiseIdentical) {
  const auto cfg = load_run_config(write_config(
      "mc_ideal.json", R"({"device": "REF-CANTILEVER", )" + ideal_instrument() +
                           R"(, "z_grid": {"stop": 200e-6, "step": 4e-6}, "seed": 9})"));
  const auto r = cli::run_montecarlo(cfg, 4, 0.0, 2);
  EXPECT_EQ(r.report.max_deviation, 0.0);
  for (std::size_t i = 1; i < r.runs.size(); ++i) {
    ASSERT_EQ(r.runs[i].trace.records.size(), r.runs[0].trace.records.size());
    for (std::size_t j = 0; j < r.runs[i].trace.records.size(); ++j)
      EXPECT_EQ(r.runs[i].trace.records[j].F_readout, r.runs[0].trace.records[j].F_readout);
  }
}

TEST(MonteCarlo, TenMicronScatterWithinEnvelope) {
  const auto cfg = load_run_config(source_dir / "configs/ref-montecarlo.json");
  const auto r = cli::run_montecarlo(cfg, 6, 10e-6, 0);
  EXPECT_TRUE(r.report.within_envelope) << r.report.max_deviation << " vs " << r.report.envelope;
  EXPECT_GT(r.report.max_deviation, 0.0);
  for (const auto& run : r.runs) EXPECT_LE(std::abs(run.placement_error), r.placement_halfwidth);
}

TEST(MonteCarlo, OutputIndependentOfWorkerCount) {
  const auto cfg = write_config("mc_jobs.json", R"({"device": "REF-CANTILEVER", "z_grid": {"stop": 100e-6, "step": 5e-6}, "seed": 77})");
  const auto a = scratch("mc_a.csv");
  const auto b = scratch("mc_b.csv");
  std::ostringstream o, e;
  ASSERT_EQ(cli::cmd_montecarlo({cfg.string(), 5, 5e-6, 1, a.string(), "", ""}, o, e), cli::exit_ok) << e.str();
  ASSERT_EQ(cli::cmd_montecarlo({cfg.string(), 5, 5e-6, 3, b.string(), "", ""}, o, e), cli::exit_ok) << e.str();
  EXPECT_EQ(io::read_file(a), io::read_file(b));
  auto ra = a;
  ra += ".report.json";
  auto rb = b;
  rb += ".report.json";
  EXPECT_EQ(io::read_file(ra), io::read_file(rb));
  EXPECT_EQ(nlohmann::json::parse(io::read_file(ra)).at("format"), "stylus-variation-report v1");
}

TEST(MonteCarlo, ScatterPastMassRejected) {
  const auto cfg = load_run_config(source_dir / "configs/ref-montecarlo.json");
  EXPECT_THROW(cli::run_montecarlo(cfg, 2, 400e-6, 1), ConfigError);
  EXPECT_THROW(cli::run_montecarlo(cfg, 0, 0.0, 1), ConfigError);
}
