#pragma once

// Reference device geometry and the calibration routines that pin the free parameters
// (beam thickness, fracture strength) of the shipped presets. `probestation calibrate-presets`
// runs these and rewrites presets/*.json.

#include <algorithm>
#include <cmath>
#include <string>

#include "probestation/contact.hpp"
#include "probestation/error.hpp"
#include "probestation/mechanics.hpp"
#include "probestation/root_finding.hpp"
#include "probestation/units.hpp"

namespace probestation::presets {

inline constexpr const char* ref_cantilever_name = "REF-CANTILEVER";
inline constexpr const char* ref_stiff_name = "REF-STIFF";

inline constexpr double ref_center_stiffness = 10.0;     // N/m
inline constexpr double stiff_center_stiffness = 60.0;   // N/m
inline constexpr double fracture_vertical_force = 4.5e-3;  // N, both designs
inline constexpr double support_compliance_example = 1e4;  // rad/(N*m), about 9% softening at COSYM

/// Stylus with an 18 um diamond tip and a 55 degree included cone angle.
inline StylusSpec default_stylus() {
  return {18e-6, units::deg_to_rad(27.5), materials::diamond()};
}

/// REF geometry before calibration. Beam thickness is a placeholder until calibrate_thickness runs.
inline DeviceSpec ref_geometry(std::string id = ref_cantilever_name) {
  DeviceSpec d;
  d.id = std::move(id);
  d.beam = {500e-6, 200e-6, 10e-6};
  d.mass = {1000e-6, 300e-6};
  d.material = materials::silicon();
  d.support_rot_compliance = 0.0;
  return d;
}

/// Beam thickness such that linear_stiffness_at(device, d) == target_k.
/// k scales with h^3 through EI, so the solve is a monotone one-dimensional root find.
inline double calibrate_thickness(DeviceSpec device, double target_k, double d) {
  auto f = [&](double log_h) {
    device.beam.thickness = std::exp(log_h);
    return std::log(linear_stiffness_at(device, d) / target_k);
  };
  const auto r = safeguarded_newton(f, std::log(1e-8), std::log(1e-3), std::log(device.beam.thickness),
                                    1e-15, 200);
  return std::exp(r.x);
}

/// Fracture strength such that, along a sweep at `placement`, fracture happens where the vertical
/// force first reaches `target_fz`. Throws if the root stress exceeds that value anywhere earlier on
/// the path (fracture would then come first).
inline double calibrate_fracture_strength(DeviceSpec device, const StylusSpec& stylus,
                                          const PlacementSpec& placement, double target_fz,
                                          double z_max, double z_step) {
  device.material.fracture_strength = 1e30;
  const ContactModel model(device, stylus, placement);
  double z_prev = 0.0;
  double max_sigma = 0.0;
  for (double z = z_step; z <= z_max; z += z_step) {
    const auto st = model.solve(z);
    if (st.F_z >= target_fz) {
      const double z_hit =
          bisect_predicate([&](double zz) { return model.solve(zz).F_z >= target_fz; }, z_prev, z, 1e-13);
      const auto hit = model.solve(z_hit);
      if (max_sigma > hit.sigma_root)
        throw SolverError("root stress peaks before the target force is reached", max_sigma);
      return hit.sigma_root;
    }
    max_sigma = std::max(max_sigma, st.sigma_root);
    z_prev = z;
  }
  throw SolverError("target vertical force not reached within the sweep", target_fz);
}

/// Fully calibrated REF-CANTILEVER (10 N/m at COSYM, fracture at 4.5 mN in flank contact).
inline DeviceSpec calibrate_ref_cantilever() {
  DeviceSpec d = ref_geometry(ref_cantilever_name);
  d.beam.thickness = calibrate_thickness(d, ref_center_stiffness, d.cosym());
  d.nominal_center_stiffness = ref_center_stiffness;
  d.material.fracture_strength = calibrate_fracture_strength(
      d, default_stylus(), PlacementSpec::at_cosym(d), fracture_vertical_force, 2e-3, 1e-6);
  return d;
}

/// Effective single-beam stand-in for the stiffer two-beam design (60 N/m, fracture at 4.5 mN).
inline DeviceSpec calibrate_ref_stiff() {
  DeviceSpec d = ref_geometry(ref_stiff_name);
  d.beam.thickness = calibrate_thickness(d, stiff_center_stiffness, d.cosym());
  d.nominal_center_stiffness = stiff_center_stiffness;
  d.material.fracture_strength = calibrate_fracture_strength(
      d, default_stylus(), PlacementSpec::at_cosym(d), fracture_vertical_force, 2e-3, 1e-6);
  return d;
}

}  // namespace probestation::presets
