#pragma once

#include <cmath>
#include <numbers>

namespace magnonqed {

// Bohr magneton over Planck constant, GHz per tesla (per unit g-factor).
inline constexpr double kMuBOverH_GHzPerT = 13.9962449;

inline constexpr double kPi = std::numbers::pi_v<double>;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

}  // namespace magnonqed
