#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kinfrac/quadrature.hpp"

namespace kinfrac {

enum class KernelKind { isotropic, rayleigh_d2, even_polynomial };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

struct KernelSpec {
  KernelKind kind = KernelKind::isotropic;
  /// Coefficients c_m of P(s) = sum_m c_m s^m, used only for even_polynomial;
  /// the phase function is p(w, w') = C * P((w . w')^2) with C fixed by normalization.
  std::vector<double> coefficients;
};

/// Phase function p(omega_i, omega_j) on the nodes of a Quadrature.
///
/// The matrix is symmetric and strictly positive, and after construction each
/// row integrates to one against the quadrature weights to machine precision,
/// so the gain operator K maps constants to themselves exactly.
class ScatteringKernel {
 public:
  ScatteringKernel(Quadrature q, KernelSpec spec, Eigen::MatrixXd phase);

  const Quadrature& quadrature() const { return q_; }
  const KernelSpec& spec() const { return spec_; }
  KernelKind kind() const { return spec_.kind; }
  /// P_ij = p(omega_i, omega_j).
  const Eigen::MatrixXd& phase() const { return phase_; }
  /// K_ij = P_ij w_j, so (K phi)_i = sum_j w_j P_ij phi_j.
  const Eigen::MatrixXd& gain() const { return gain_; }
  std::size_t size() const { return q_.size(); }

  /// Worst |sum_j w_j P_ij - 1| over rows.
  double normalization_defect() const;

 private:
  Quadrature q_;
  KernelSpec spec_;
  Eigen::MatrixXd phase_;
  Eigen::MatrixXd gain_;
};

ScatteringKernel build_kernel(const Quadrature& q, const KernelSpec& spec);

/// (I - K) phi.
Eigen::VectorXd apply_L(const ScatteringKernel& k, const Eigen::VectorXd& phi);
Eigen::VectorXcd apply_L(const ScatteringKernel& k, const Eigen::VectorXcd& phi);

/// (1 / 2|S^d|) sum_ij w_i w_j P_ij |phi_i - phi_j|^2.
double dirichlet_form(const ScatteringKernel& k, const Eigen::VectorXcd& phi);

/// Eigenvalues (ascending) of L viewed as a self-adjoint operator on the
/// w-weighted inner product.
Eigen::VectorXd operator_spectrum(const ScatteringKernel& k);

struct OmegaSolution {
  /// size() x (d+1), row i holds Omega(omega_i).
  Eigen::MatrixXd omega_field;
  /// <omega . Omega>.
  double transport_coeff = 0.0;
  /// Smallest nonzero eigenvalue of the discrete L (operator convention).
  double gap = 0.0;
  /// Max over components of the discrete L2 residual of L Omega = omega.
  double residual = 0.0;
};

/// Mean-zero solution of L Omega = omega, via a dense system bordered by the
/// constraint sum_i w_i Omega_i = 0.
OmegaSolution solve_omega(const ScatteringKernel& k);

/// <omega (x) Omega>, a (d+1) x (d+1) matrix.
Eigen::MatrixXd diffusion_matrix(const ScatteringKernel& k, const OmegaSolution& s);

}  // namespace kinfrac
