#pragma once

// Unit conversions at the file boundary. Everything inside the library is SI.

namespace probestation::units {

inline constexpr double um_per_m = 1e6;
inline constexpr double uN_per_N = 1e6;

constexpr double m_to_um(double m) { return m * um_per_m; }
constexpr double um_to_m(double um) { return um / um_per_m; }
constexpr double N_to_uN(double n) { return n * uN_per_N; }
constexpr double uN_to_N(double un) { return un / uN_per_N; }

inline constexpr double pi = 3.141592653589793238462643383279502884;

constexpr double deg_to_rad(double deg) { return deg * pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / pi; }

}  // namespace probestation::units
