#pragma once

// Unit conventions used throughout the library:
//   lengths and wavelengths     nm
//   optical frequencies         GHz (ordinary frequency, nu = c / lambda)
//   linewidths (FWHM)           MHz (ordinary frequency)
//   Rabi frequency and the decay rate entering g2(tau): angular, rad/ns
//   (quoted as "GHz" in the usual lab shorthand)
//   correlation delays          ns
//   optical powers              uW

#include <numbers>

namespace nanotwin::units {

inline constexpr double speed_of_light_m_per_s = 299'792'458.0;
inline constexpr double pi = std::numbers::pi;

/// Optical frequency in GHz for a vacuum wavelength in nm.
constexpr double frequency_ghz(double wavelength_nm) {
    return speed_of_light_m_per_s / wavelength_nm;  // (m/s) / nm = 1e9 Hz
}

constexpr double wavelength_nm(double frequency_ghz) {
    return speed_of_light_m_per_s / frequency_ghz;
}

/// Wavelength reached from `wavelength_nm` after shifting its frequency by `shift_ghz`.
constexpr double shift_wavelength(double wavelength_nm_in, double shift_ghz) {
    return wavelength_nm(frequency_ghz(wavelength_nm_in) + shift_ghz);
}

/// Converts an ordinary-frequency FWHM in MHz to an angular rate in rad/ns.
constexpr double mhz_to_rad_per_ns(double mhz) { return 2.0 * pi * mhz * 1e-3; }

constexpr double deg_to_rad(double deg) { return deg * pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / pi; }

}  // namespace nanotwin::units
