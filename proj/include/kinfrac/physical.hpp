#pragma once

namespace kinfrac {

/// Constants entering the Stefan-Boltzmann emission a T^4 at the wall.
struct PhysicalConstants {
  double a = 1.0;       ///< radiation constant 8 pi^5 k_B^4 / (15 c^2 hbar^3)
  double c = 1.0;       ///< speed of light
  double k_B = 1.0;     ///< Boltzmann constant
  double hbar = 1.0;    ///< reduced Planck constant
  bool si = false;

  /// a = c = 1.
  static PhysicalConstants nondimensional();
  /// CODATA 2018 exact values for c, k_B, hbar; a from the formula above.
  static PhysicalConstants si_units();
};

}  // namespace kinfrac
