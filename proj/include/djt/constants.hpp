// constants.hpp — physical constants and unit conversions
//
// Unit conventions used throughout the library:
//   energies      E/h in GHz
//   capacitances  fF
//   phases        radians
//   flux          either radians (phi_e = 2*pi*Phi_e/Phi_0) or units of Phi_0

#pragma once

#include <numbers>

namespace djt::constants {

inline constexpr double pi = std::numbers::pi;

// CODATA 2018 exact values (SI redefinition).
inline constexpr double elementary_charge_C = 1.602176634e-19;
inline constexpr double planck_Js = 6.62607015e-34;

// Charging energy e^2/2C of a 1 fF capacitor, expressed as a frequency in GHz.
// All fF -> GHz conversions go through this single constant.
inline constexpr double charging_energy_1fF_GHz =
    elementary_charge_C * elementary_charge_C / (2.0 * 1e-15 * planck_Js) * 1e-9;

} // namespace djt::constants
