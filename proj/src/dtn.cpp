#include "kinfrac/dtn.hpp"

#include <array>
#include <cmath>
#include <string>

#include "kinfrac/errors.hpp"

namespace kinfrac {

namespace {

void check(int d, int n, const char* who) {
  if (d < 1) throw InvalidArgument(std::string(who) + ": dimension must be >= 1");
  if (n < 0) throw InvalidArgument(std::string(who) + ": degree must be >= 0");
}

double discriminant_root(int d, int n) {
  const double half = 0.5 * (d - 1);
  return std::sqrt(half * half + sphere_eigenvalue(d, n));
}

}  // namespace

double sphere_eigenvalue(int d, int n) {
  check(d, n, "sphere_eigenvalue");
  return static_cast<double>(n) * (n + d - 1);
}

double alpha_plus(int d, int n) {
  check(d, n, "alpha_plus");
  return -0.5 * (d - 1) + discriminant_root(d, n);
}

double alpha_minus(int d, int n) {
  check(d, n, "alpha_minus");
  return -0.5 * (d - 1) - discriminant_root(d, n);
}

double shooting_log_derivative(int d, int n, int steps) {
  check(d, n, "shooting_log_derivative");
  if (steps < 10) throw InvalidArgument("shooting_log_derivative: too few steps");
  const double lambda = sphere_eigenvalue(d, n);
  // f_tt + (d-1) f_t - lambda f = 0 in t = ln r. Integrate from t = 0 down to t = -T and ask
  // for f_t(-T) = 0: the unbounded branch grows towards r = 0, so this selects the bounded one.
  const double depth = 40.0 / (d + 2.0 * std::sqrt(lambda));
  const double h = -depth / steps;
  auto rhs = [&](const std::array<double, 2>& s) {
    return std::array<double, 2>{s[1], lambda * s[0] - (d - 1) * s[1]};
  };
  auto shoot = [&](double slope) {
    std::array<double, 2> s{1.0, slope};
    for (int i = 0; i < steps; ++i) {
      const auto k1 = rhs(s);
      const auto k2 = rhs({s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]});
      const auto k3 = rhs({s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]});
      const auto k4 = rhs({s[0] + h * k3[0], s[1] + h * k3[1]});
      for (int c = 0; c < 2; ++c) s[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    return s[1];
  };
  // The end slope is affine in the starting slope.
  const double end0 = shoot(0.0);
  const double end1 = shoot(1.0);
  const double denom = end1 - end0;
  if (!std::isfinite(end0) || !std::isfinite(end1) || denom == 0.0 ||
      std::abs(denom) < 1e-300)
    throw SolverError("shooting_log_derivative: shooting did not converge for d=" +
                      std::to_string(d) + ", n=" + std::to_string(n));
  const double slope = -end0 / denom;
  if (!std::isfinite(slope))
    throw SolverError("shooting_log_derivative: non-finite slope for n=" + std::to_string(n));
  return slope;
}

DtnTable dtn_compare(int d, int n_max, int shoot_max) {
  if (n_max < 2) throw InvalidArgument("dtn_compare: n_max must be >= 2");
  DtnTable table;
  table.d = d;
  for (int n = 0; n <= n_max; ++n) {
    DtnRow row;
    row.n = n;
    row.lambda = sphere_eigenvalue(d, n);
    row.alpha_plus = alpha_plus(d, n);
    row.alpha_minus = alpha_minus(d, n);
    row.sqrt_lambda = std::sqrt(row.lambda);
    row.gap = row.alpha_plus - row.sqrt_lambda;
    if (d == 2 && n <= shoot_max) {
      row.shooting_checked = true;
      row.shooting = shooting_log_derivative(d, n);
    }
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace kinfrac
