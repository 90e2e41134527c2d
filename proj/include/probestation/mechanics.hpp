#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "probestation/error.hpp"
#include "probestation/units.hpp"

namespace probestation {

struct MaterialProps {
  double youngs_modulus = 0.0;     // Pa
  double poisson_ratio = 0.0;      // -
  double fracture_strength = 0.0;  // Pa
};

inline void validate(const MaterialProps& m) {
  if (!(m.youngs_modulus > 0.0)) throw ConfigError("material.youngs_modulus must be > 0");
  if (!(m.poisson_ratio >= 0.0 && m.poisson_ratio < 0.5))
    throw ConfigError("material.poisson_ratio must be in [0, 0.5)");
  if (!(m.fracture_strength > 0.0)) throw ConfigError("material.fracture_strength must be > 0");
}

namespace materials {

/// Single-crystal silicon. The fracture strength is a nominal order of magnitude.
inline MaterialProps silicon() { return {169e9, 0.28, 1e9}; }

/// Natural diamond stylus.
inline MaterialProps diamond() { return {1141e9, 0.07, 3e9}; }

}  // namespace materials

struct BeamSpec {
  double length = 0.0;     // L, m
  double width = 0.0;      // b, m
  double thickness = 0.0;  // h, m

  [[nodiscard]] double second_moment() const { return width * thickness * thickness * thickness / 12.0; }
};

/// Flexural rigidity EI of the beam for a given material.
inline double flexural_rigidity(const BeamSpec& beam, const MaterialProps& mat) {
  return mat.youngs_modulus * beam.second_moment();
}

inline constexpr double slenderness_limit = 0.2;

inline void validate(const BeamSpec& b) {
  if (!(b.length > 0.0)) throw ConfigError("beam.length must be > 0");
  if (!(b.width > 0.0)) throw ConfigError("beam.width must be > 0");
  if (!(b.thickness > 0.0)) throw ConfigError("beam.thickness must be > 0");
}

/// Model-validity warnings. Never fatal.
inline std::vector<std::string> model_warnings(const BeamSpec& b) {
  std::vector<std::string> out;
  if (b.thickness / b.length > slenderness_limit) {
    out.push_back("beam thickness/length = " + std::to_string(b.thickness / b.length) +
                  " exceeds " + std::to_string(slenderness_limit) +
                  "; Euler-Bernoulli tip compliance may be inaccurate");
  }
  return out;
}

/// Rigid proof mass. `length` is the extent of the top surface from the beam tip to the outer edge.
struct ProofMassSpec {
  double length = 0.0;     // Lm, m
  double thickness = 0.0;  // m
};

inline void validate(const ProofMassSpec& m) {
  if (!(m.length > 0.0)) throw ConfigError("mass.length must be > 0");
  if (!(m.thickness > 0.0)) throw ConfigError("mass.thickness must be > 0");
}

/// Conical stylus with a spherical tip.
struct StylusSpec {
  double tip_radius = 0.0;       // R, m
  double cone_half_angle = 0.0;  // alpha, rad
  MaterialProps material;

  /// Surface tilt at which the cone flank lies flat on the surface.
  [[nodiscard]] double flank_onset_angle() const { return units::pi / 2.0 - cone_half_angle; }
};

inline void validate(const StylusSpec& s) {
  if (!(s.tip_radius > 0.0)) throw ConfigError("stylus.tip_radius must be > 0");
  if (!(s.cone_half_angle > 0.0 && s.cone_half_angle < units::pi / 2.0))
    throw ConfigError("stylus.cone_half_angle must be in (0, pi/2)");
  validate(s.material);
}

struct DeviceSpec {
  std::string id;
  BeamSpec beam;
  ProofMassSpec mass;
  MaterialProps material;
  double support_rot_compliance = 0.0;   // c_s, rad/(N*m)
  double nominal_center_stiffness = 0.0;  // N/m, documentation only

  [[nodiscard]] double flexural_rigidity() const { return probestation::flexural_rigidity(beam, material); }
  [[nodiscard]] double cosym() const { return mass.length / 2.0; }
};

inline void validate(const DeviceSpec& d) {
  validate(d.beam);
  validate(d.mass);
  validate(d.material);
  if (!(d.support_rot_compliance >= 0.0)) throw ConfigError("support_rot_compliance must be >= 0");
}

/// Symmetric 2x2 matrix relating beam-tip (force, moment) and (deflection, rotation).
struct Sym2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  [[nodiscard]] double det() const { return a11 * a22 - a12 * a12; }
  [[nodiscard]] Sym2 inverse() const {
    const double d = det();
    return {a22 / d, -a12 / d, a11 / d};
  }
  [[nodiscard]] std::pair<double, double> apply(double x, double y) const {
    return {a11 * x + a12 * y, a12 * x + a22 * y};
  }
  [[nodiscard]] double quadratic(double x, double y) const {
    return a11 * x * x + 2.0 * a12 * x * y + a22 * y * y;
  }
};

/// Tip compliance of a clamped Euler-Bernoulli beam whose clamp has rotational compliance c_s.
/// (Q, M) -> (delta, theta).
inline Sym2 tip_compliance(const BeamSpec& beam, const MaterialProps& mat, double c_s = 0.0) {
  const double L = beam.length;
  const double ei = flexural_rigidity(beam, mat);
  return {L * L * L / (3.0 * ei) + c_s * L * L, L * L / (2.0 * ei) + c_s * L, L / ei + c_s};
}

inline Sym2 tip_compliance(const DeviceSpec& d) {
  return tip_compliance(d.beam, d.material, d.support_rot_compliance);
}

struct TipResponse {
  double deflection = 0.0;  // m
  double rotation = 0.0;    // rad
};

inline TipResponse beam_tip_response(const BeamSpec& beam, const MaterialProps& mat, double force,
                                     double moment, double c_s = 0.0) {
  validate(beam);
  const double L = beam.length;
  const double ei = flexural_rigidity(beam, mat);
  const double support_rot = c_s * (force * L + moment);
  return {force * L * L * L / (3.0 * ei) + moment * L * L / (2.0 * ei) + support_rot * L,
          force * L * L / (2.0 * ei) + moment * L / ei + support_rot};
}

/// Stiffness against a vertical point load at distance d from the beam tip along the mass.
inline double linear_stiffness_at(const DeviceSpec& device, double d) {
  if (!(d >= 0.0 && d <= device.mass.length))
    throw DomainError("load offset d=" + std::to_string(d) + " m outside [0, " +
                      std::to_string(device.mass.length) + "]");
  const double L = device.beam.length;
  const double ei = device.flexural_rigidity();
  const double arm = L + d;
  const double compliance =
      (L * L * L / 3.0 + d * L * L + L * d * d) / ei + device.support_rot_compliance * arm * arm;
  return 1.0 / compliance;
}

/// Effective contact modulus E* of two elastic bodies.
inline double contact_modulus(const MaterialProps& a, const MaterialProps& b) {
  return 1.0 / ((1.0 - a.poisson_ratio * a.poisson_ratio) / a.youngs_modulus +
                (1.0 - b.poisson_ratio * b.poisson_ratio) / b.youngs_modulus);
}

/// Hertz contact radius for a sphere of radius R pressed onto a flat with force F.
inline double hertz_contact_radius(double force, double radius, const MaterialProps& tip,
                                   const MaterialProps& substrate) {
  if (!(force >= 0.0)) throw DomainError("Hertz force must be >= 0");
  if (!(radius > 0.0)) throw DomainError("Hertz radius must be > 0");
  return std::cbrt(3.0 * force * radius / (4.0 * contact_modulus(tip, substrate)));
}

/// Peak (centre) pressure of a Hertzian sphere-on-flat contact.
inline double hertz_peak_pressure(double force, double radius, const MaterialProps& tip,
                                  const MaterialProps& substrate) {
  if (!(force >= 0.0)) throw DomainError("Hertz force must be >= 0");
  if (!(radius > 0.0)) throw DomainError("Hertz radius must be > 0");
  const double es = contact_modulus(tip, substrate);
  return std::cbrt(6.0 * force * es * es / (units::pi * units::pi * units::pi * radius * radius));
}

struct RootStress {
  double sigma = 0.0;  // Pa
  bool fractured = false;
};

/// Outer-fibre bending stress at the clamp and the fracture predicate sigma >= strength.
inline RootStress root_bending_stress(const BeamSpec& beam, const MaterialProps& mat, double root_moment) {
  validate(beam);
  const double sigma = std::abs(root_moment) * (beam.thickness / 2.0) / beam.second_moment();
  return {sigma, sigma >= mat.fracture_strength};
}

}  // namespace probestation
