#pragma once

#include <vector>

namespace kinfrac {

/// Exponents of the homogeneous solutions r^alpha e_n of the Laplace equation in the unit
/// ball of R^{d+1}, e_n a spherical harmonic of degree n on S^d:
///   alpha_(+/-)(n) = -(d-1)/2 +/- sqrt((d-1)^2/4 + n(n+d-1)).
double alpha_plus(int d, int n);
double alpha_minus(int d, int n);

/// lambda_n = n(n+d-1), the Laplace-Beltrami eigenvalue of degree n on S^d.
double sphere_eigenvalue(int d, int n);

struct DtnRow {
  int n = 0;
  double lambda = 0.0;
  double alpha_plus = 0.0;
  double alpha_minus = 0.0;
  double sqrt_lambda = 0.0;
  /// alpha_plus - sqrt(lambda).
  double gap = 0.0;
  /// f'(1)/f(1) from the radial shooting solve, when it was run for this row.
  bool shooting_checked = false;
  double shooting = 0.0;
};

struct DtnTable {
  int d = 1;
  std::vector<DtnRow> rows;
};

/// Boundary log-derivative f'(1)/f(1) of the solution of r^2 f'' + d r f' - lambda_n f = 0
/// that stays bounded at r = 0, found by shooting inward in t = ln r.
double shooting_log_derivative(int d, int n, int steps = 4000);

/// One row per degree n = 0..n_max. For d = 2 the rows n <= shoot_max are cross-checked
/// by shooting_log_derivative.
DtnTable dtn_compare(int d, int n_max, int shoot_max = 3);

}  // namespace kinfrac
