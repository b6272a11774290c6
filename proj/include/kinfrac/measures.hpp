#pragma once

#include <cmath>
#include <numbers>

namespace kinfrac {

/// Lebesgue measure |B^n| of the unit ball in R^n.
inline double ball_measure(int n) {
  const double half = 0.5 * n;
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

/// Surface measure |S^n| of the unit sphere in R^{n+1}; equals (n+1)|B^{n+1}|.
inline double sphere_measure(int n) { return (n + 1) * ball_measure(n + 1); }

}  // namespace kinfrac
