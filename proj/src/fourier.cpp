#include "kinfrac/fourier.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "kinfrac/errors.hpp"

namespace kinfrac {

std::string to_string(const ModeIndex& k, int d) {
  if (d == 1) return std::to_string(k[0]);
  return "(" + std::to_string(k[0]) + "," + std::to_string(k[1]) + ")";
}

double mode_norm(const ModeIndex& k) {
  return std::hypot(static_cast<double>(k[0]), static_cast<double>(k[1]));
}

double mode_phase(const ModeIndex& k, std::span<const double> omega_x) {
  double dot = 0.0;
  for (std::size_t c = 0; c < omega_x.size() && c < 2; ++c) dot += k[c] * omega_x[c];
  return 2.0 * std::numbers::pi * dot;
}

std::vector<ModeIndex> symmetric_mode_set(int d, int kmax) {
  if (kmax < 0) throw InvalidArgument("symmetric_mode_set: kmax must be nonnegative");
  std::vector<ModeIndex> out;
  if (d == 1) {
    for (int k = -kmax; k <= kmax; ++k) out.push_back({k, 0});
  } else if (d == 2) {
    for (int a = -kmax; a <= kmax; ++a)
      for (int b = -kmax; b <= kmax; ++b) out.push_back({a, b});
  } else {
    throw InvalidArgument("symmetric_mode_set: dimension must be 1 or 2");
  }
  return out;
}

int find_mode(std::span<const ModeIndex> modes, const ModeIndex& k) {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i] == k) return static_cast<int>(i);
  return -1;
}

std::vector<TorusPoint> torus_grid(int d, int n) {
  if (n < 1) throw InvalidArgument("torus_grid: need at least one point per axis");
  std::vector<TorusPoint> pts;
  if (d == 1) {
    for (int m = 0; m < n; ++m) pts.push_back({static_cast<double>(m) / n, 0.0});
  } else {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        pts.push_back({static_cast<double>(a) / n, static_cast<double>(b) / n});
  }
  return pts;
}

Synthesis synthesize(std::span<const ModeIndex> modes,
                     std::span<const std::complex<double>> coeffs,
                     std::span<const TorusPoint> points) {
  if (modes.size() != coeffs.size())
    throw InvalidArgument("synthesize: mode and coefficient counts differ");
  Synthesis out;
  out.values.resize(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const double arg = 2.0 * std::numbers::pi *
                         (modes[m][0] * points[p][0] + modes[m][1] * points[p][1]);
      acc += coeffs[m] * std::complex<double>(std::cos(arg), std::sin(arg));
    }
    out.values[p] = acc.real();
    out.max_imag = std::max(out.max_imag, std::abs(acc.imag()));
  }
  return out;
}

std::vector<std::complex<double>> analyze(int d, int n, std::span<const double> samples,
                                          std::span<const ModeIndex> modes) {
  const auto points = torus_grid(d, n);
  if (samples.size() != points.size())
    throw InvalidArgument("analyze: expected " + std::to_string(points.size()) + " samples, got " +
                          std::to_string(samples.size()));
  std::vector<std::complex<double>> out(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t p = 0; p < points.size(); ++p) {
      const double arg = -2.0 * std::numbers::pi *
                         (modes[m][0] * points[p][0] + modes[m][1] * points[p][1]);
      acc += samples[p] * std::complex<double>(std::cos(arg), std::sin(arg));
    }
    out[m] = acc / static_cast<double>(points.size());
  }
  return out;
}

double conjugate_symmetry_defect(std::span<const ModeIndex> modes,
                                 std::span<const std::complex<double>> coeffs) {
  double worst = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const int partner = find_mode(modes, {-modes[m][0], -modes[m][1]});
    if (partner < 0) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(coeffs[static_cast<std::size_t>(partner)] - std::conj(coeffs[m])));
  }
  return worst;
}

}  // namespace kinfrac
