#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinfrac/scattering.hpp"

namespace kinfrac {

/// Invariant checks of one discrete scattering operator L = I - K.
struct OperatorAudit {
  int dimension = 2;
  int n = 16;
  std::string kernel;
  std::size_t directions = 0;

  /// max_i |(L 1)_i|.
  double constant_defect = 0.0;
  /// |<phi, L psi>_w - <L phi, psi>_w| / (|phi|_w |psi|_w) for seeded random phi, psi.
  double self_adjoint_defect = 0.0;
  /// Largest singular value of L in the w-weighted inner product.
  double operator_norm = 0.0;
  /// Number of singular values <= 1e-9.
  int nullspace_dimension = 0;
  /// Distance of the computed null vector from the constants.
  double null_vector_defect = 0.0;
  double normalization_defect = 0.0;

  /// max |Omega_i - omega_i| (meaningful for kernels with L omega = omega).
  double omega_error = 0.0;
  double transport_coeff = 0.0;
  double transport_coeff_error = 0.0;
  /// Frobenius distance of <omega (x) Omega> from (<omega.Omega>/(d+1)) I.
  double isotropy_defect = 0.0;
  double gap = 0.0;
  /// max |Omega - pinv(L) omega|.
  double pseudoinverse_error = 0.0;
  /// Relative |dirichlet_form(phi) - Re <conj(phi) L phi>| for a random phi.
  double dirichlet_defect = 0.0;
  /// dirichlet_form(phi) - gap |phi - <phi>|^2 for a random phi (should be >= 0).
  double coercivity_margin = 0.0;
  double seconds = 0.0;

  bool operator_pass() const;
  bool omega_pass() const;
};

OperatorAudit audit_operator(int d, int n, const KernelSpec& spec, std::uint64_t seed = 12345);

}  // namespace kinfrac
