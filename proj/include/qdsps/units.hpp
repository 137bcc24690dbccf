#pragma once

#include <numbers>

// Unit conventions used across the library:
//   time            ns for rates (1/ns), ps for pulse widths and time tags
//   rates           Gamma, gamma*, Rabi frequency, drive detuning: angular, 1/ns (rad/ns)
//   cavity widths   kappa, mode splitting, QD-mode detuning: ordinary frequency, GHz (FWHM)
//   spectra         ordinary frequency detuning, GHz
namespace qdsps::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Speed of light used for wavelength <-> frequency conversion (m/s).
inline constexpr double speed_of_light = 2.998e8;

inline constexpr double ps_per_ns = 1000.0;

// Angular rate in rad/ns to ordinary frequency in GHz and back.
constexpr double angular_to_ghz(double rad_per_ns) { return rad_per_ns / two_pi; }
constexpr double ghz_to_angular(double ghz) { return ghz * two_pi; }

// FWHM of a Gaussian in units of its standard deviation.
inline constexpr double gaussian_fwhm_per_sigma = 2.3548200450309493;

} // namespace qdsps::units
