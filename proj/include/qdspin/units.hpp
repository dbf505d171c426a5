#pragma once

#include <numbers>

// Internal unit system: times in ns, decay rates in 1/ns, angular
// frequencies in rad/ns. User-facing frequencies are cyclic (nu = omega/2pi)
// in GHz or MHz and are converted at every boundary with these helpers.
namespace qdspin::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Boltzmann constant in micro-eV per kelvin.
inline constexpr double k_boltzmann_ueV = 86.173332621;
/// Reduced Planck constant in micro-eV * ns.
inline constexpr double hbar_ueV_ns = 0.6582119569;
/// Bohr magneton over Planck constant, GHz per tesla (cyclic).
inline constexpr double bohr_ghz_per_tesla = 13.996;

constexpr double ghz_to_angular(double ghz) { return two_pi * ghz; }
constexpr double angular_to_ghz(double w) { return w / two_pi; }
constexpr double mhz_to_angular(double mhz) { return two_pi * mhz * 1e-3; }
constexpr double angular_to_mhz(double w) { return w / two_pi * 1e3; }
constexpr double thz_to_ghz(double thz) { return thz * 1e3; }
constexpr double ghz_to_thz(double ghz) { return ghz * 1e-3; }

/// Energy (micro-eV) of an angular frequency (rad/ns).
constexpr double angular_to_ueV(double w) { return hbar_ueV_ns * w; }
constexpr double ueV_to_angular(double e) { return e / hbar_ueV_ns; }

}  // namespace qdspin::units
