#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace kinfrac {

enum class HalfRange { upper, lower };

/// Discrete-ordinates rule on the unit sphere S^d of R^{d+1}, d in {1, 2}.
///
/// Node i is the unit vector (omega_x, omega_y) with omega_x in R^d and the
/// normal component omega_y stored last. No node is grazing (omega_y != 0),
/// so characteristic sweeps can always divide by omega_y.
///
/// The half-range weights omega_y^+ are integrated exactly by the d = 2
/// double-Gauss rule. The d = 1 equal-weight rule is only exact up to
/// half_moment_tolerance(); half-range averages are normalized by the
/// discrete half measure so that the half-range average of 1 is exactly 1.
class Quadrature {
 public:
  Quadrature(int dimension, int resolution, Eigen::MatrixXd nodes,
             Eigen::VectorXd weights);

  int dimension() const { return dimension_; }
  int resolution() const { return resolution_; }
  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }

  /// size() x (d+1) matrix, columns (omega_x..., omega_y).
  const Eigen::MatrixXd& nodes() const { return nodes_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double omega_y(std::size_t i) const { return nodes_(static_cast<Eigen::Index>(i), dimension_); }
  double omega_x(std::size_t i, int component) const {
    return nodes_(static_cast<Eigen::Index>(i), component);
  }

  const std::vector<std::size_t>& upward() const { return upward_; }
  const std::vector<std::size_t>& downward() const { return downward_; }

  /// |S^d| and |B^d| (exact values).
  double sphere_measure() const { return sphere_measure_; }
  double ball_measure() const { return ball_measure_; }
  /// sum_i w_i omega_{y,i}^+, the rule's approximation of |B^d|.
  double half_measure() const { return half_measure_; }
  /// Relative defect |half_measure - |B^d|| / |B^d| (0 up to rounding for d = 2).
  double half_moment_tolerance() const { return half_moment_tolerance_; }

 private:
  int dimension_;
  int resolution_;
  Eigen::MatrixXd nodes_;
  Eigen::VectorXd weights_;
  std::vector<std::size_t> upward_;
  std::vector<std::size_t> downward_;
  double sphere_measure_;
  double ball_measure_;
  double half_measure_;
  double half_moment_tolerance_;
};

/// d = 1: 2n equal-weight directions at angles 2 pi (j + 1/2) / (2n).
/// d = 2: n/2 Gauss-Legendre nodes in omega_y on each of (0,1) and (-1,0)
/// times n uniform azimuths, n^2 directions in total.
/// Requires n >= 4 and n even.
Quadrature build_quadrature(int d, int n);

/// <phi> = sum_i w_i phi_i / |S^d|.
double average(const Quadrature& q, std::span<const double> values);
std::complex<double> average(const Quadrature& q, std::span<const std::complex<double>> values);

/// <<phi>>_± = sum_i w_i phi_i omega_{y,i}^± / half_measure().
double half_moment(const Quadrature& q, std::span<const double> values, HalfRange sign);
std::complex<double> half_moment(const Quadrature& q,
                                 std::span<const std::complex<double>> values,
                                 HalfRange sign);

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<const std::complex<double>> as_span(const Eigen::VectorXcd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace kinfrac
