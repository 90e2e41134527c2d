#pragma once

// JSON (de)serialization of device, stylus, instrument and solver specs. SI units, field names as
// in the C++ types. Unknown fields are rejected; error messages carry the JSON path.

#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>

#include <json.hpp>

#include "probestation/contact.hpp"
#include "probestation/error.hpp"
#include "probestation/instrument.hpp"
#include "probestation/mechanics.hpp"

namespace probestation::io {

using nlohmann::json;

namespace detail {

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(path + "." + it.key() + ": unknown field");
  }
}

inline double number(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing required field");
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline double number_or(const json& j, const std::string& path, const char* key, double fallback) {
  return j.contains(key) ? number(j, path, key) : fallback;
}

/// Like number_or, but also accepts the string "inf" for +infinity.
inline double stiffness_or(const json& j, const std::string& path, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  return number(j, path, key);
}

inline json stiffness_json(double k) { return std::isinf(k) ? json("inf") : json(k); }

template <class T, class F>
T checked(const std::string& path, F&& build) {
  try {
    T v = build();
    validate(v);
    return v;
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw ConfigError(path + ": " + msg);
  }
}

}  // namespace detail

inline json to_json(const MaterialProps& m) {
  return {{"youngs_modulus", m.youngs_modulus}, {"poisson_ratio", m.poisson_ratio},
          {"fracture_strength", m.fracture_strength}};
}

inline MaterialProps material_from_json(const json& j, const std::string& path = "material") {
  detail::reject_unknown(j, path, {"youngs_modulus", "poisson_ratio", "fracture_strength"});
  return detail::checked<MaterialProps>(path, [&] {
    return MaterialProps{detail::number(j, path, "youngs_modulus"), detail::number(j, path, "poisson_ratio"),
                         detail::number(j, path, "fracture_strength")};
  });
}

inline json to_json(const BeamSpec& b) {
  return {{"length", b.length}, {"width", b.width}, {"thickness", b.thickness}};
}

inline BeamSpec beam_from_json(const json& j, const std::string& path = "beam") {
  detail::reject_unknown(j, path, {"length", "width", "thickness"});
  return detail::checked<BeamSpec>(path, [&] {
    return BeamSpec{detail::number(j, path, "length"), detail::number(j, path, "width"),
                    detail::number(j, path, "thickness")};
  });
}

inline json to_json(const ProofMassSpec& m) { return {{"length", m.length}, {"thickness", m.thickness}}; }

inline ProofMassSpec mass_from_json(const json& j, const std::string& path = "mass") {
  detail::reject_unknown(j, path, {"length", "thickness"});
  return detail::checked<ProofMassSpec>(path, [&] {
    return ProofMassSpec{detail::number(j, path, "length"), detail::number(j, path, "thickness")};
  });
}

inline json to_json(const StylusSpec& s) {
  return {{"tip_radius", s.tip_radius}, {"cone_half_angle", s.cone_half_angle}, {"material", to_json(s.material)}};
}

inline StylusSpec stylus_from_json(const json& j, const std::string& path = "stylus") {
  detail::reject_unknown(j, path, {"tip_radius", "cone_half_angle", "material"});
  if (!j.contains("material")) throw ConfigError(path + ".material: missing required field");
  const MaterialProps mat = material_from_json(j.at("material"), path + ".material");
  return detail::checked<StylusSpec>(path, [&] {
    return StylusSpec{detail::number(j, path, "tip_radius"), detail::number(j, path, "cone_half_angle"), mat};
  });
}

inline json to_json(const DeviceSpec& d) {
  json j = {{"beam", to_json(d.beam)},
            {"mass", to_json(d.mass)},
            {"material", to_json(d.material)},
            {"support_rot_compliance", d.support_rot_compliance},
            {"nominal_center_stiffness", d.nominal_center_stiffness}};
  if (!d.id.empty()) j["id"] = d.id;
  return j;
}

inline DeviceSpec device_from_json(const json& j, const std::string& path = "device") {
  detail::reject_unknown(j, path,
                         {"id", "beam", "mass", "material", "support_rot_compliance", "nominal_center_stiffness"});
  DeviceSpec d;
  if (j.contains("id")) {
    if (!j.at("id").is_string()) throw ConfigError(path + ".id: expected a string");
    d.id = j.at("id").get<std::string>();
  }
  for (const char* key : {"beam", "mass", "material"}) {
    if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing required field");
  }
  d.beam = beam_from_json(j.at("beam"), path + ".beam");
  d.mass = mass_from_json(j.at("mass"), path + ".mass");
  d.material = material_from_json(j.at("material"), path + ".material");
  d.support_rot_compliance = detail::number_or(j, path, "support_rot_compliance", 0.0);
  d.nominal_center_stiffness = detail::number_or(j, path, "nominal_center_stiffness", 0.0);
  return detail::checked<DeviceSpec>(path, [&] { return d; });
}

inline json to_json(const LoadCellModel& c) {
  return {{"noise_std_single", c.noise_std_single}, {"sample_rate", c.sample_rate}, {"avg_window", c.avg_window},
          {"calibration_bias", c.calibration_bias}, {"range_max", c.range_max}};
}

inline LoadCellModel load_cell_from_json(const json& j, const std::string& path = "load_cell") {
  detail::reject_unknown(j, path, {"noise_std_single", "sample_rate", "avg_window", "calibration_bias", "range_max"});
  const LoadCellModel def;
  return detail::checked<LoadCellModel>(path, [&] {
    return LoadCellModel{detail::number_or(j, path, "noise_std_single", def.noise_std_single),
                         detail::number_or(j, path, "sample_rate", def.sample_rate),
                         detail::number_or(j, path, "avg_window", def.avg_window),
                         detail::number_or(j, path, "calibration_bias", def.calibration_bias),
                         detail::number_or(j, path, "range_max", def.range_max)};
  });
}

inline json to_json(const ActuatorModel& a) {
  return {{"step_size", a.step_size}, {"cyclic_amplitude", a.cyclic_amplitude},
          {"cyclic_period", a.cyclic_period}, {"cyclic_phase", a.cyclic_phase}};
}

inline ActuatorModel actuator_from_json(const json& j, const std::string& path = "actuator") {
  detail::reject_unknown(j, path, {"step_size", "cyclic_amplitude", "cyclic_period", "cyclic_phase"});
  const ActuatorModel def;
  return detail::checked<ActuatorModel>(path, [&] {
    return ActuatorModel{detail::number_or(j, path, "step_size", def.step_size),
                         detail::number_or(j, path, "cyclic_amplitude", def.cyclic_amplitude),
                         detail::number_or(j, path, "cyclic_period", def.cyclic_period),
                         detail::number_or(j, path, "cyclic_phase", def.cyclic_phase)};
  });
}

inline json to_json(const ApparatusModel& a) { return {{"stiffness", detail::stiffness_json(a.stiffness)}}; }

inline ApparatusModel apparatus_from_json(const json& j, const std::string& path = "apparatus") {
  detail::reject_unknown(j, path, {"stiffness"});
  return detail::checked<ApparatusModel>(
      path, [&] { return ApparatusModel{detail::stiffness_or(j, path, "stiffness", ApparatusModel{}.stiffness)}; });
}

inline json to_json(const InstrumentModel& m) {
  return {{"load_cell", to_json(m.load_cell)}, {"actuator", to_json(m.actuator)}, {"apparatus", to_json(m.apparatus)}};
}

inline InstrumentModel instrument_from_json(const json& j, const std::string& path = "instrument") {
  detail::reject_unknown(j, path, {"load_cell", "actuator", "apparatus"});
  InstrumentModel m;
  if (j.contains("load_cell")) m.load_cell = load_cell_from_json(j.at("load_cell"), path + ".load_cell");
  if (j.contains("actuator")) m.actuator = actuator_from_json(j.at("actuator"), path + ".actuator");
  if (j.contains("apparatus")) m.apparatus = apparatus_from_json(j.at("apparatus"), path + ".apparatus");
  return m;
}

inline json to_json(const SolverConfig& c) {
  return {{"residual_tol", c.residual_tol}, {"max_iterations", c.max_iterations}, {"continuation", c.continuation}};
}

inline SolverConfig solver_from_json(const json& j, const std::string& path = "solver") {
  detail::reject_unknown(j, path, {"residual_tol", "max_iterations", "continuation"});
  SolverConfig c;
  c.residual_tol = detail::number_or(j, path, "residual_tol", c.residual_tol);
  if (j.contains("max_iterations")) {
    if (!j.at("max_iterations").is_number_integer()) throw ConfigError(path + ".max_iterations: expected an integer");
    c.max_iterations = j.at("max_iterations").get<int>();
  }
  if (j.contains("continuation")) {
    if (!j.at("continuation").is_boolean()) throw ConfigError(path + ".continuation: expected a boolean");
    c.continuation = j.at("continuation").get<bool>();
  }
  return detail::checked<SolverConfig>(path, [&] { return c; });
}

}  // namespace probestation::io
