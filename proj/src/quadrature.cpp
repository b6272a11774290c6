#include "kinfrac/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kinfrac/errors.hpp"
#include "kinfrac/gauss_legendre.hpp"
#include "kinfrac/measures.hpp"

namespace kinfrac {

GaussRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw InvalidArgument("gauss_legendre: need at least one node");
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = mid - half * x;
    rule.nodes[hi] = mid + half * x;
    rule.weights[lo] = half * w;
    rule.weights[hi] = half * w;
  }
  return rule;
}

Quadrature::Quadrature(int dimension, int resolution, Eigen::MatrixXd nodes,
                       Eigen::VectorXd weights)
    : dimension_(dimension),
      resolution_(resolution),
      nodes_(std::move(nodes)),
      weights_(std::move(weights)),
      sphere_measure_(kinfrac::sphere_measure(dimension)),
      ball_measure_(kinfrac::ball_measure(dimension)) {
  if (nodes_.rows() != weights_.size() || nodes_.cols() != dimension_ + 1)
    throw InvalidArgument("Quadrature: node/weight shape mismatch");
  half_measure_ = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double wy = omega_y(i);
    if (wy == 0.0) throw InvalidArgument("Quadrature: grazing node with omega_y = 0");
    if (wy > 0.0) {
      upward_.push_back(i);
      half_measure_ += weights_(static_cast<Eigen::Index>(i)) * wy;
    } else {
      downward_.push_back(i);
    }
  }
  half_moment_tolerance_ = std::abs(half_measure_ - ball_measure_) / ball_measure_;
}

Quadrature build_quadrature(int d, int n) {
  if (d != 1 && d != 2)
    throw InvalidArgument("build_quadrature: dimension must be 1 or 2, got " + std::to_string(d));
  if (n < 4 || n % 2 != 0)
    throw InvalidArgument("build_quadrature: resolution must be even and >= 4, got " +
                          std::to_string(n));
  constexpr double pi = std::numbers::pi;

  if (d == 1) {
    const int count = 2 * n;
    Eigen::MatrixXd nodes(count, 2);
    Eigen::VectorXd weights = Eigen::VectorXd::Constant(count, pi / n);
    for (int j = 0; j < count; ++j) {
      const double theta = 2.0 * pi * (j + 0.5) / count;
      nodes(j, 0) = std::cos(theta);
      nodes(j, 1) = std::sin(theta);
    }
    return Quadrature(d, n, std::move(nodes), std::move(weights));
  }

  const int polar = n / 2;
  const int azimuths = n;
  const GaussRule upper = gauss_legendre(polar, 0.0, 1.0);
  const int count = 2 * polar * azimuths;
  Eigen::MatrixXd nodes(count, 3);
  Eigen::VectorXd weights(count);
  int idx = 0;
  for (int hemisphere = 0; hemisphere < 2; ++hemisphere) {
    const double sign = hemisphere == 0 ? 1.0 : -1.0;
    for (int p = 0; p < polar; ++p) {
      const double t = sign * upper.nodes[static_cast<std::size_t>(p)];
      const double s = std::sqrt((1.0 - t) * (1.0 + t));
      for (int a = 0; a < azimuths; ++a) {
        const double phi = 2.0 * pi * (a + 0.5) / azimuths;
        nodes(idx, 0) = s * std::cos(phi);
        nodes(idx, 1) = s * std::sin(phi);
        nodes(idx, 2) = t;
        weights(idx) = upper.weights[static_cast<std::size_t>(p)] * 2.0 * pi / azimuths;
        ++idx;
      }
    }
  }
  return Quadrature(d, n, std::move(nodes), std::move(weights));
}

namespace {

template <typename T>
T weighted_sum(const Quadrature& q, std::span<const T> values) {
  if (values.size() != q.size())
    throw InvalidArgument("quadrature: expected " + std::to_string(q.size()) +
                          " node values, got " + std::to_string(values.size()));
  T acc{};
  for (std::size_t i = 0; i < values.size(); ++i)
    acc += q.weights()(static_cast<Eigen::Index>(i)) * values[i];
  return acc;
}

template <typename T>
T half_sum(const Quadrature& q, std::span<const T> values, HalfRange sign) {
  if (values.size() != q.size())
    throw InvalidArgument("quadrature: expected " + std::to_string(q.size()) +
                          " node values, got " + std::to_string(values.size()));
  const auto& idx = sign == HalfRange::upper ? q.upward() : q.downward();
  T acc{};
  for (std::size_t i : idx)
    acc += q.weights()(static_cast<Eigen::Index>(i)) * std::abs(q.omega_y(i)) * values[i];
  return acc / q.half_measure();
}

}  // namespace

double average(const Quadrature& q, std::span<const double> values) {
  return weighted_sum(q, values) / q.sphere_measure();
}

std::complex<double> average(const Quadrature& q, std::span<const std::complex<double>> values) {
  return weighted_sum(q, values) / q.sphere_measure();
}

double half_moment(const Quadrature& q, std::span<const double> values, HalfRange sign) {
  return half_sum(q, values, sign);
}

std::complex<double> half_moment(const Quadrature& q,
                                 std::span<const std::complex<double>> values,
                                 HalfRange sign) {
  return half_sum(q, values, sign);
}

}  // namespace kinfrac
