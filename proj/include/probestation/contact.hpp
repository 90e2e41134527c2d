#pragma once

// Quasi-static stylus/proof-mass contact.
//
// Coordinates: x horizontal, measured from the clamp towards the outer edge of the mass; w vertical,
// positive downwards. The mass is rigid and rotates with the beam tip (rotation theta, positive when
// the outer edge goes down). A point at arc position s from the beam tip sits at
// (L + s cos(theta), delta + s sin(theta)). The stylus axis is at x = L + x_s and the lowest point
// of the tip sphere is at depth z_act. Contact is frictionless.
//
// The equilibrium path is parameterised by theta. Along each contact branch the normal direction
// (tilt phi from vertical) and the lever arm m = M/F are functions of theta alone, so the beam
// equation theta = F * (C12 cos(phi) + C22 m) gives F explicitly and z_act(theta) follows from the
// kinematics. Solving for a prescribed z_act is a one-dimensional root find on theta.
//
// Branches, in path order:
//   sliding      sphere tangent to the top surface, contact at s(theta) = (x_s - R sin)/cos
//   edge/sphere  outer corner (s = Lm) on the tip sphere, normal radial from the corner
//   edge/cone    outer corner on the cone flank, normal fixed at phi = pi/2 - alpha
//   flank        top surface parallel to the flank; rotation pinned, deflection takes the load

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "probestation/error.hpp"
#include "probestation/mechanics.hpp"
#include "probestation/root_finding.hpp"
#include "probestation/units.hpp"

namespace probestation {

enum class ContactMode { NoContact, SurfaceSliding, EdgeContact, FlankContact, Fractured };

inline std::string_view to_string(ContactMode m) {
  switch (m) {
    case ContactMode::NoContact: return "NoContact";
    case ContactMode::SurfaceSliding: return "SurfaceSliding";
    case ContactMode::EdgeContact: return "EdgeContact";
    case ContactMode::FlankContact: return "FlankContact";
    case ContactMode::Fractured: return "Fractured";
  }
  return "NoContact";
}

inline std::optional<ContactMode> parse_contact_mode(std::string_view s) {
  for (auto m : {ContactMode::NoContact, ContactMode::SurfaceSliding, ContactMode::EdgeContact,
                 ContactMode::FlankContact, ContactMode::Fractured}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

/// Stylus-axis position along the mass, measured from the beam tip.
struct PlacementSpec {
  double x_s = 0.0;  // m

  static PlacementSpec at_cosym(const DeviceSpec& d, double offset = 0.0) { return {d.cosym() + offset}; }
};

struct EquilibriumState {
  double z_act = 0.0;       // prescribed tip depth, m
  double theta = 0.0;       // mass rotation = beam tip rotation, rad
  double delta = 0.0;       // beam tip deflection, m
  double s = 0.0;           // contact (or effective load) point along the mass from the beam tip, m
  double F = 0.0;           // contact force magnitude, N
  double F_z = 0.0;         // vertical component, N
  double F_x = 0.0;         // horizontal component, N
  double M_root = 0.0;      // N*m
  double sigma_root = 0.0;  // Pa
  double normal_tilt = 0.0;  // tilt of the contact normal from vertical, rad
  double residual = 0.0;     // N
  bool load_on_beam = false;
  ContactMode mode = ContactMode::NoContact;
};

enum class EventKind { SlideOff, EdgeContactBegin, FlankContactBegin, Fracture };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::SlideOff: return "SlideOff";
    case EventKind::EdgeContactBegin: return "EdgeContactBegin";
    case EventKind::FlankContactBegin: return "FlankContactBegin";
    case EventKind::Fracture: return "Fracture";
  }
  return "SlideOff";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::SlideOff, EventKind::EdgeContactBegin, EventKind::FlankContactBegin,
                 EventKind::Fracture}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct SimEvent {
  EventKind kind = EventKind::SlideOff;
  double z_act = 0.0;
  double F_z = 0.0;
};

struct SimTrace {
  std::vector<EquilibriumState> states;
  std::vector<SimEvent> events;
};

struct SolverConfig {
  double residual_tol = 1e-9;  // N
  int max_iterations = 200;
  bool continuation = true;
};

inline void validate(const SolverConfig& c) {
  if (!(c.residual_tol > 0.0)) throw ConfigError("solver.residual_tol must be > 0");
  if (c.max_iterations < 1) throw ConfigError("solver.max_iterations must be >= 1");
}

struct ContactPoint {
  double s = 0.0;                // along the mass from the beam tip, m
  double tangency_offset = 0.0;  // horizontal distance from stylus axis to contact point, m
};

/// Tangency of the tip sphere with the tilted top surface. Returns nullopt when the sphere does not
/// reach the surface plane.
inline std::optional<ContactPoint> contact_point(double theta, double delta, double x_s,
                                                 const StylusSpec& stylus, double z_act) {
  const double R = stylus.tip_radius;
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  // distance from sphere centre to the surface plane, minus R
  const double gap = x_s * sn - (z_act - R - delta) * c - R;
  if (gap > 1e-12 * std::max(R, 1.0)) return std::nullopt;
  return ContactPoint{(x_s - R * sn) / c, R * sn};
}

/// Direction of the corner contact force (tilt from vertical) when the outer corner of the mass
/// touches the tip sphere. Valid while the corner is on the spherical cap.
inline double edge_normal_tilt(double theta, double x_s, double mass_length, const StylusSpec& stylus) {
  const double arg = (x_s - mass_length * std::cos(theta)) / stylus.tip_radius;
  return std::asin(std::clamp(arg, -1.0, 1.0));
}

class ContactModel {
public:
  enum class Branch { Sliding, EdgeSphere, EdgeCone, Flank };

  struct Transitions {
    std::optional<double> slide_off_theta;
    std::optional<double> slide_off_z;
    std::optional<double> cone_theta;  // corner leaves the sphere and reaches the cone flank
    std::optional<double> cone_z;
    double flank_theta = 0.0;
    double flank_z = 0.0;
  };

  ContactModel(DeviceSpec device, StylusSpec stylus, PlacementSpec placement, SolverConfig cfg = {})
      : device_(std::move(device)), stylus_(stylus), placement_(placement), cfg_(cfg) {
    validate(device_);
    validate(stylus_);
    validate(cfg_);
    if (!(placement_.x_s >= 0.0 && placement_.x_s <= device_.mass.length))
      throw DomainError("stylus placement x_s=" + std::to_string(placement_.x_s) +
                        " m is not on the proof mass [0, " + std::to_string(device_.mass.length) + "]");
    compliance_ = tip_compliance(device_);
    stiffness_ = compliance_.inverse();
    k_ref_ = linear_stiffness_at(device_, placement_.x_s);
    compute_transitions();
  }

  [[nodiscard]] const DeviceSpec& device() const { return device_; }
  [[nodiscard]] const StylusSpec& stylus() const { return stylus_; }
  [[nodiscard]] const PlacementSpec& placement() const { return placement_; }
  [[nodiscard]] const Transitions& transitions() const { return tr_; }
  [[nodiscard]] const Sym2& compliance() const { return compliance_; }
  [[nodiscard]] const Sym2& stiffness() const { return stiffness_; }

  [[nodiscard]] Branch branch_at(double z) const {
    if (z >= tr_.flank_z) return Branch::Flank;
    if (tr_.slide_off_z && z >= *tr_.slide_off_z) {
      return (tr_.cone_z && z >= *tr_.cone_z) ? Branch::EdgeCone : Branch::EdgeSphere;
    }
    return Branch::Sliding;
  }

  /// Equilibrium at prescribed depth z. `prev` (an earlier state on the same sweep) seeds the root
  /// find when continuation is enabled. Marks the state Fractured when the root stress reaches the
  /// fracture strength; forces are those carried at that depth.
  [[nodiscard]] EquilibriumState solve(double z, const EquilibriumState* prev = nullptr) const {
    if (!(z >= 0.0)) throw DomainError("z_act must be >= 0");
    EquilibriumState st;
    if (z == 0.0) {
      st.mode = ContactMode::NoContact;
      st.s = placement_.x_s;
      return st;
    }
    st = solve_on_branch(branch_at(z), z, prev);
    if (st.F < 0.0) {
      EquilibriumState none;
      none.z_act = z;
      none.s = placement_.x_s;
      return none;
    }
    if (st.sigma_root >= device_.material.fracture_strength) st.mode = ContactMode::Fractured;
    return st;
  }

  /// Solve restricted to one branch. Throws DomainError when z lies outside that branch.
  [[nodiscard]] EquilibriumState solve_on_branch(Branch b, double z, const EquilibriumState* prev = nullptr) const {
    if (b == Branch::Flank) {
      if (z < tr_.flank_z) throw DomainError("flank contact requires z_act >= flank onset");
      return flank_state(z);
    }
    auto [lo, hi] = theta_range(b);
    const double z_lo = state_at_theta(b, lo).z_act;
    const double z_hi = state_at_theta(b, hi).z_act;
    if (z < z_lo || z > z_hi)
      throw DomainError("z_act=" + std::to_string(z) + " outside the requested contact branch");

    double guess = 0.5 * (lo + hi);
    if (prev != nullptr && cfg_.continuation && prev->theta >= lo && prev->theta <= hi) {
      guess = prev->theta;
      if (prev->z_act <= z && prev->theta > lo) lo = prev->theta;
    }
    auto residual = [&](double th) { return k_ref_ * (state_at_theta(b, th).z_act - z); };
    RootResult r;
    try {
      r = safeguarded_newton(residual, lo, hi, guess, cfg_.residual_tol, cfg_.max_iterations);
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " at z_act=" + std::to_string(z), e.last_residual(), z);
    }
    EquilibriumState st = state_at_theta(b, r.x);
    st.residual = r.residual;
    st.z_act = z;
    return st;
  }

  /// Equilibrium on branch b with the mass at rotation theta (not valid for Flank).
  [[nodiscard]] EquilibriumState state_at_theta(Branch b, double theta) const {
    const double R = stylus_.tip_radius;
    const double Lm = device_.mass.length;
    const double x_s = placement_.x_s;
    double phi = theta;
    double arm = 0.0;
    double geom = 0.0;
    double s = 0.0;
    switch (b) {
      case Branch::Sliding:
        s = (x_s - R * std::sin(theta)) / std::cos(theta);
        arm = s;
        geom = s * std::sin(theta) + R * (1.0 - std::cos(theta));
        break;
      case Branch::EdgeSphere:
        s = Lm;
        phi = edge_normal_tilt(theta, x_s, Lm, stylus_);
        arm = Lm * std::cos(theta - phi);
        geom = Lm * std::sin(theta) + R * (1.0 - std::cos(phi));
        break;
      case Branch::EdgeCone: {
        s = Lm;
        phi = stylus_.flank_onset_angle();
        const double t = (x_s - R * std::sin(phi) - Lm * std::cos(theta)) / std::cos(phi);
        arm = Lm * std::cos(theta - phi);
        geom = Lm * std::sin(theta) + R * (1.0 - std::cos(phi)) + t * std::sin(phi);
        break;
      }
      case Branch::Flank:
        throw DomainError("flank branch is parameterised by z_act, not theta");
    }
    const double denom = compliance_.a12 * std::cos(phi) + compliance_.a22 * arm;
    if (!(denom > 0.0))
      throw SolverError("contact geometry cannot sustain a positive rotation (lever arm too far inboard)",
                        denom);
    EquilibriumState st;
    st.theta = theta;
    st.F = theta / denom;
    st.F_z = st.F * std::cos(phi);
    st.F_x = st.F * std::sin(phi);
    const double moment = st.F * arm;
    st.delta = compliance_.a11 * st.F_z + compliance_.a12 * moment;
    st.z_act = st.delta + geom;
    st.s = s;
    st.normal_tilt = phi;
    st.load_on_beam = s < 0.0;
    fill_root(st, moment);
    st.mode = (b == Branch::Sliding) ? ContactMode::SurfaceSliding : ContactMode::EdgeContact;
    return st;
  }

  /// Stored elastic energy 1/2 (Q, M) . (delta, theta), with Q = F_z and M the tip moment.
  [[nodiscard]] double elastic_energy(const EquilibriumState& st) const {
    return 0.5 * stiffness_.quadratic(st.delta, st.theta);
  }

private:
  [[nodiscard]] std::pair<double, double> theta_range(Branch b) const {
    switch (b) {
      case Branch::Sliding: return {0.0, tr_.slide_off_theta.value_or(tr_.flank_theta)};
      case Branch::EdgeSphere: return {*tr_.slide_off_theta, *tr_.cone_theta};
      case Branch::EdgeCone: return {*tr_.cone_theta, tr_.flank_theta};
      case Branch::Flank: break;
    }
    return {tr_.flank_theta, tr_.flank_theta};
  }

  void fill_root(EquilibriumState& st, double tip_moment) const {
    st.M_root = st.F_z * device_.beam.length + tip_moment;
    st.sigma_root = root_bending_stress(device_.beam, device_.material, st.M_root).sigma;
  }

  [[nodiscard]] EquilibriumState flank_state(double z) const {
    const double th = tr_.flank_theta;
    const double R = stylus_.tip_radius;
    // surface coincides with the flank line, which is the sphere tangent at tilt th
    const double s_t = (placement_.x_s - R * std::sin(th)) / std::cos(th);
    const double geom = s_t * std::sin(th) + R * (1.0 - std::cos(th));
    EquilibriumState st;
    st.z_act = z;
    st.theta = th;
    st.delta = z - geom;
    auto [q, m] = stiffness_.apply(st.delta, th);
    st.F_z = q;
    st.F = q / std::cos(th);
    st.F_x = st.F * std::sin(th);
    st.s = m / st.F;
    st.normal_tilt = th;
    st.load_on_beam = st.s < 0.0;
    fill_root(st, m);
    st.mode = ContactMode::FlankContact;
    return st;
  }

  void compute_transitions() {
    const double R = stylus_.tip_radius;
    const double Lm = device_.mass.length;
    const double x_s = placement_.x_s;
    tr_.flank_theta = stylus_.flank_onset_angle();

    // slide-off: Lm cos(theta) + R sin(theta) = x_s
    const double beta = std::atan2(R, Lm);
    const double th_so = beta + std::acos(std::clamp(x_s / std::hypot(Lm, R), -1.0, 1.0));
    if (th_so < tr_.flank_theta) {
      tr_.slide_off_theta = th_so;
      tr_.slide_off_z = state_at_theta(Branch::Sliding, th_so).z_act;
      // corner reaches the sphere/cone junction: x_s - Lm cos(theta) = R sin(phi_c)
      const double arg = (x_s - R * std::sin(tr_.flank_theta)) / Lm;
      const double th_c = std::acos(std::clamp(arg, -1.0, 1.0));
      tr_.cone_theta = std::clamp(th_c, th_so, tr_.flank_theta);
      tr_.cone_z = state_at_theta(Branch::EdgeSphere, *tr_.cone_theta).z_act;
      tr_.flank_z = state_at_theta(Branch::EdgeCone, tr_.flank_theta).z_act;
    } else {
      tr_.flank_z = state_at_theta(Branch::Sliding, tr_.flank_theta).z_act;
    }
  }

  DeviceSpec device_;
  StylusSpec stylus_;
  PlacementSpec placement_;
  SolverConfig cfg_;
  Sym2 compliance_;
  Sym2 stiffness_;
  double k_ref_ = 1.0;
  Transitions tr_;
};

inline EquilibriumState solve_equilibrium(const DeviceSpec& device, const StylusSpec& stylus,
                                          const PlacementSpec& placement, double z_act,
                                          const EquilibriumState* prev = nullptr,
                                          const SolverConfig& cfg = {}) {
  return ContactModel(device, stylus, placement, cfg).solve(z_act, prev);
}

/// Corner contact after slide-off. The corner is held at s = Lm and the force is radial on the tip
/// sphere (or normal to the cone flank once the corner has run past the end of the spherical cap).
inline EquilibriumState edge_contact_state(const DeviceSpec& device, const StylusSpec& stylus,
                                           const PlacementSpec& placement, double z_act,
                                           const SolverConfig& cfg = {}) {
  const ContactModel model(device, stylus, placement, cfg);
  const auto& tr = model.transitions();
  if (!tr.slide_off_z || z_act < *tr.slide_off_z)
    throw DomainError("edge contact requires the stylus to have slid off the mass");
  if (z_act > tr.flank_z) throw DomainError("z_act is past the onset of flank contact");
  auto b = (tr.cone_z && z_act >= *tr.cone_z) ? ContactModel::Branch::EdgeCone : ContactModel::Branch::EdgeSphere;
  return model.solve_on_branch(b, z_act);
}

/// Flank contact: rotation pinned at pi/2 - alpha, the extra depth is taken up by beam deflection.
/// `s` is the effective load point, which moves inboard as z_act grows and becomes negative once
/// the load reaches the beam.
inline EquilibriumState flank_contact_state(const DeviceSpec& device, const StylusSpec& stylus,
                                            const PlacementSpec& placement, double z_act,
                                            const SolverConfig& cfg = {}) {
  return ContactModel(device, stylus, placement, cfg).solve_on_branch(ContactModel::Branch::Flank, z_act);
}

/// Quasi-static sweep over z_grid. Stops after the first fracture.
inline SimTrace run_sweep(const DeviceSpec& device, const StylusSpec& stylus, const PlacementSpec& placement,
                          const std::vector<double>& z_grid, const SolverConfig& cfg = {}) {
  SimTrace trace;
  if (z_grid.empty()) return trace;
  if (!(z_grid.front() >= 0.0)) throw DomainError("z grid must start at z >= 0");
  for (std::size_t i = 1; i < z_grid.size(); ++i) {
    if (!(z_grid[i] > z_grid[i - 1])) throw DomainError("z grid must be strictly increasing");
  }

  const ContactModel model(device, stylus, placement, cfg);
  const auto& tr = model.transitions();
  const double strength = device.material.fracture_strength;

  struct Pending {
    EventKind kind;
    double z;
    double F_z;
  };
  std::vector<Pending> transitions;
  if (tr.slide_off_z) {
    const double fz = model.state_at_theta(ContactModel::Branch::Sliding, *tr.slide_off_theta).F_z;
    transitions.push_back({EventKind::SlideOff, *tr.slide_off_z, fz});
    transitions.push_back({EventKind::EdgeContactBegin, *tr.slide_off_z, fz});
  }
  {
    const auto pre = tr.slide_off_z ? ContactModel::Branch::EdgeCone : ContactModel::Branch::Sliding;
    transitions.push_back({EventKind::FlankContactBegin, tr.flank_z, model.state_at_theta(pre, tr.flank_theta).F_z});
  }

  double z_prev = -1.0;
  std::optional<EquilibriumState> prev;
  std::size_t next_transition = 0;
  for (double z : z_grid) {
    EquilibriumState st = model.solve(z, prev ? &*prev : nullptr);
    double z_break = z;
    const bool breaks = st.sigma_root >= strength;
    if (breaks) {
      // first crossing inside (z_prev, z]
      const double lo = std::max(z_prev, 0.0);
      z_break = bisect_predicate([&](double zz) { return model.solve(zz).sigma_root >= strength; }, lo, z, 1e-12);
    }
    while (next_transition < transitions.size() && transitions[next_transition].z <= z_break) {
      const auto& t = transitions[next_transition++];
      trace.events.push_back({t.kind, t.z, t.F_z});
    }
    if (breaks) {
      const EquilibriumState at_break = model.solve(z_break);
      trace.events.push_back({EventKind::Fracture, z_break, at_break.F_z});
      EquilibriumState broken;
      broken.z_act = z;
      broken.theta = at_break.theta;
      broken.delta = at_break.delta;
      broken.s = at_break.s;
      broken.normal_tilt = at_break.normal_tilt;
      broken.mode = ContactMode::Fractured;
      trace.states.push_back(broken);
      break;
    }
    trace.states.push_back(st);
    prev = st;
    z_prev = z;
  }
  return trace;
}

/// Uniform grid start, start+step, ... up to and including stop (within step/1000).
inline std::vector<double> make_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw ConfigError("z grid step must be > 0");
  if (!(stop > start)) throw ConfigError("z grid stop must be > start");
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-3));
  g.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) g.push_back(start + static_cast<double>(i) * step);
  return g;
}

}  // namespace probestation
