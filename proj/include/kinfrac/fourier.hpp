#pragma once

#include <array>
#include <complex>
#include <span>
#include <string>
#include <vector>

namespace kinfrac {

/// Fourier index k in Z^d; the second entry is unused (zero) when d = 1.
using ModeIndex = std::array<int, 2>;
/// A point of the torus T^d; the second coordinate is unused when d = 1.
using TorusPoint = std::array<double, 2>;

std::string to_string(const ModeIndex& k, int d);

/// |k|, the Euclidean norm of the index.
double mode_norm(const ModeIndex& k);
/// 2 pi k . omega_x for a direction with horizontal components omega_x.
double mode_phase(const ModeIndex& k, std::span<const double> omega_x);

/// All k with max |k_i| <= kmax (d = 1: -kmax..kmax), ordered lexicographically.
std::vector<ModeIndex> symmetric_mode_set(int d, int kmax);

/// Position of -k in `modes`, or -1.
int find_mode(std::span<const ModeIndex> modes, const ModeIndex& k);

/// Uniform grid of n points per axis: x_m = m / n.
std::vector<TorusPoint> torus_grid(int d, int n);

struct Synthesis {
  std::vector<double> values;
  /// Largest |imaginary part| encountered before it was discarded.
  double max_imag = 0.0;
};

/// u(x) = sum_k c_k exp(2 pi i k . x) at each point.
Synthesis synthesize(std::span<const ModeIndex> modes,
                     std::span<const std::complex<double>> coeffs,
                     std::span<const TorusPoint> points);

/// c_k = mean over the uniform grid of u(x) exp(-2 pi i k . x); exact for
/// trigonometric polynomials resolved by the grid.
std::vector<std::complex<double>> analyze(int d, int n, std::span<const double> samples,
                                          std::span<const ModeIndex> modes);

/// Largest |c_{-k} - conj(c_k)| over the mode set; infinity when some -k is missing.
double conjugate_symmetry_defect(std::span<const ModeIndex> modes,
                                 std::span<const std::complex<double>> coeffs);

}  // namespace kinfrac
