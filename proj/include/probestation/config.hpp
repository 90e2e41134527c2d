#pragma once

// Run configuration: one JSON document per run. See docs/config.md for the schema.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "probestation/contact.hpp"
#include "probestation/error.hpp"
#include "probestation/instrument.hpp"
#include "probestation/io/json_specs.hpp"
#include "probestation/io/trace_csv.hpp"
#include "probestation/mechanics.hpp"
#include "probestation/presets.hpp"

#ifndef PROBESTATION_PRESET_DIR
#define PROBESTATION_PRESET_DIR "presets"
#endif

namespace probestation {

inline constexpr const char* config_format = "probestation-config v1";
inline constexpr const char* preset_path_env = "PROBESTATION_PRESET_PATH";

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;

  [[nodiscard]] std::vector<double> values() const { return make_grid(start, stop, step); }
};

struct OutputPaths {
  std::string trace;
  std::string events;
  std::string plot;
  std::string report;
  std::string csv;
};

struct RunConfig {
  DeviceSpec device;
  StylusSpec stylus = presets::default_stylus();
  PlacementSpec placement;
  InstrumentModel instrument;
  SolverConfig solver;
  GridSpec z_grid;
  std::uint64_t seed = 1;
  std::vector<double> positions;  // load offsets along the mass for stiffness-vs-position, m
  double fit_lo = 5e-6;
  double fit_hi = 50e-6;
  OutputPaths output;
  std::vector<std::string> warnings;
};

/// Directories searched for named presets: $PROBESTATION_PRESET_PATH (':'-separated), then the
/// install-time preset directory.
inline std::vector<std::filesystem::path> preset_search_path() {
  std::vector<std::filesystem::path> dirs;
  if (const char* env = std::getenv(preset_path_env); env != nullptr) {
    std::string s = env;
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto pos = s.find(':', start);
      const auto part = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
      if (!part.empty()) dirs.emplace_back(part);
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
  }
  dirs.emplace_back(PROBESTATION_PRESET_DIR);
  return dirs;
}

inline std::string preset_file_name(const std::string& name) {
  std::string f;
  for (char c : name) f += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return f + ".json";
}

inline DeviceSpec load_preset(const std::string& name) {
  for (const auto& dir : preset_search_path()) {
    const auto p = dir / preset_file_name(name);
    if (std::filesystem::exists(p)) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(io::read_file(p));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("preset '" + name + "' (" + p.string() + "): " + e.what());
      }
      return io::device_from_json(j, "preset " + name);
    }
  }
  throw ConfigError("device: unknown preset '" + name + "' (searched " + std::string(preset_path_env) +
                    " and " + PROBESTATION_PRESET_DIR + ")");
}

namespace detail {

/// Translate a byte offset into "line L, column C".
inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: JSON syntax error at " + detail::line_col(text, e.byte > 0 ? e.byte - 1 : 0) +
                      ": " + e.what());
  }
  io::detail::reject_unknown(j, "config",
                             {"format", "device", "stylus", "placement", "instrument", "solver", "z_grid", "seed",
                              "positions", "fit_window", "output"});
  if (j.contains("format") && j.at("format") != config_format)
    throw ConfigError(std::string("config.format: expected '") + config_format + "'");

  RunConfig c;
  if (!j.contains("device")) throw ConfigError("config.device: missing required field");
  const auto& dj = j.at("device");
  if (dj.is_string()) {
    c.device = load_preset(dj.get<std::string>());
  } else {
    c.device = io::device_from_json(dj, "config.device");
  }
  for (auto& w : model_warnings(c.device.beam)) c.warnings.push_back(std::move(w));

  if (j.contains("stylus")) c.stylus = io::stylus_from_json(j.at("stylus"), "config.stylus");
  if (j.contains("instrument")) c.instrument = io::instrument_from_json(j.at("instrument"), "config.instrument");
  if (j.contains("solver")) c.solver = io::solver_from_json(j.at("solver"), "config.solver");

  c.placement = PlacementSpec::at_cosym(c.device);
  if (j.contains("placement")) {
    const auto& pj = j.at("placement");
    io::detail::reject_unknown(pj, "config.placement", {"x_s", "offset_from_cosym"});
    if (pj.contains("x_s") && pj.contains("offset_from_cosym"))
      throw ConfigError("config.placement: give either x_s or offset_from_cosym, not both");
    if (pj.contains("x_s")) c.placement.x_s = io::detail::number(pj, "config.placement", "x_s");
    if (pj.contains("offset_from_cosym"))
      c.placement.x_s = c.device.cosym() + io::detail::number(pj, "config.placement", "offset_from_cosym");
  }
  if (!(c.placement.x_s >= 0.0 && c.placement.x_s <= c.device.mass.length))
    throw ConfigError("config.placement: x_s=" + std::to_string(c.placement.x_s) + " m is off the proof mass");

  if (!j.contains("z_grid")) throw ConfigError("config.z_grid: missing required field");
  {
    const auto& gj = j.at("z_grid");
    io::detail::reject_unknown(gj, "config.z_grid", {"start", "stop", "step"});
    c.z_grid = {io::detail::number_or(gj, "config.z_grid", "start", 0.0), io::detail::number(gj, "config.z_grid", "stop"),
                io::detail::number(gj, "config.z_grid", "step")};
    if (!(c.z_grid.step > 0.0)) throw ConfigError("config.z_grid.step: must be > 0");
    if (!(c.z_grid.stop > c.z_grid.start)) throw ConfigError("config.z_grid.stop: must be > start");
    if (!(c.z_grid.start >= 0.0)) throw ConfigError("config.z_grid.start: must be >= 0");
  }

  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("positions")) {
    const auto& pj = j.at("positions");
    if (!pj.is_array()) throw ConfigError("config.positions: expected an array of numbers");
    for (std::size_t i = 0; i < pj.size(); ++i) {
      if (!pj[i].is_number()) throw ConfigError("config.positions[" + std::to_string(i) + "]: expected a number");
      const double d = pj[i].get<double>();
      if (!(d >= 0.0 && d <= c.device.mass.length))
        throw ConfigError("config.positions[" + std::to_string(i) + "]: off the proof mass");
      c.positions.push_back(d);
    }
  }
  if (j.contains("fit_window")) {
    const auto& fj = j.at("fit_window");
    io::detail::reject_unknown(fj, "config.fit_window", {"lo", "hi"});
    c.fit_lo = io::detail::number(fj, "config.fit_window", "lo");
    c.fit_hi = io::detail::number(fj, "config.fit_window", "hi");
    if (!(c.fit_hi > c.fit_lo)) throw ConfigError("config.fit_window: hi must be > lo");
  }
  if (j.contains("output")) {
    const auto& oj = j.at("output");
    io::detail::reject_unknown(oj, "config.output", {"trace", "events", "plot", "report", "csv"});
    auto str = [&](const char* key, std::string& dst) {
      if (!oj.contains(key)) return;
      if (!oj.at(key).is_string()) throw ConfigError(std::string("config.output.") + key + ": expected a string");
      dst = oj.at(key).get<std::string>();
    };
    str("trace", c.output.trace);
    str("events", c.output.events);
    str("plot", c.output.plot);
    str("report", c.output.report);
    str("csv", c.output.csv);
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return parse_run_config(io::read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

/// Metadata line written into trace files.
inline nlohmann::json run_meta(const RunConfig& c, const std::string& kind) {
  return {{"kind", kind},
          {"device", c.device.id},
          {"x_s_um", units::m_to_um(c.placement.x_s)},
          {"seed", c.seed},
          {"stylus", io::to_json(c.stylus)},
          {"instrument", io::to_json(c.instrument)}};
}

}  // namespace probestation
