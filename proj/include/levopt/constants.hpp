#pragma once

// Physical constants (SI) and unit conversions used throughout the toolkit.

namespace levopt::constants {

inline constexpr double k_boltzmann = 1.380649e-23;  // J/K
inline constexpr double avogadro = 6.02214076e23;    // 1/mol

inline constexpr double pascal_per_torr = 133.322;
inline constexpr double pascal_per_bar = 1.0e5;

inline double torr_to_pascal(double torr) { return torr * pascal_per_torr; }
inline double pascal_to_torr(double pa) { return pa / pascal_per_torr; }

}  // namespace levopt::constants
