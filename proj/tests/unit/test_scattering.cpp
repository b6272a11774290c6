#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/QR>

#include "kinfrac/audit.hpp"
#include "kinfrac/errors.hpp"
#include "kinfrac/scattering.hpp"

using namespace kinfrac;
constexpr double pi = std::numbers::pi;

namespace {

Eigen::VectorXd random_vector(Eigen::Index m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(m);
  for (auto& x : v) x = g(rng);
  return v;
}

double w_inner(const Quadrature& q, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (q.weights().array() * a.array() * b.array()).sum() / q.sphere_measure();
}

std::vector<std::pair<int, KernelSpec>> kernels() {
  return {{1, {KernelKind::isotropic, {}}},
          {2, {KernelKind::isotropic, {}}},
          {2, {KernelKind::rayleigh_d2, {}}},
          {2, {KernelKind::even_polynomial, {1.0, 0.5, 0.25}}},
          {1, {KernelKind::even_polynomial, {2.0, 1.0}}}};
}

}  // namespace

TEST_CASE("phase function values") {
  const Quadrature q = build_quadrature(2, 8);
  const ScatteringKernel iso = build_kernel(q, {});
  CHECK((iso.phase().array() - 1.0 / (4 * pi)).abs().maxCoeff() < 1e-15);
  const ScatteringKernel ray = build_kernel(q, {KernelKind::rayleigh_d2, {}});
  for (Eigen::Index i = 0; i < ray.phase().rows(); ++i)
    CHECK(ray.phase()(i, i) == doctest::Approx(3.0 / (8 * pi)).epsilon(1e-10));
  CHECK(ray.normalization_defect() < 1e-10);
  CHECK((ray.phase() - ray.phase().transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Rayleigh row sums hold on refined rules") {
  for (int n : {8, 16, 24}) {
    const ScatteringKernel k = build_kernel(build_quadrature(2, n), {KernelKind::rayleigh_d2, {}});
    const Eigen::VectorXd rows = k.phase() * k.quadrature().weights();
    CHECK((rows.array() - 1.0).abs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("kernel construction errors") {
  const Quadrature q1 = build_quadrature(1, 8);
  CHECK_THROWS_AS(build_kernel(q1, {KernelKind::rayleigh_d2, {}}), InvalidArgument);
  CHECK_THROWS_AS(build_kernel(q1, {KernelKind::even_polynomial, {}}), InvalidArgument);
  CHECK_THROWS_AS(build_kernel(q1, {KernelKind::even_polynomial, {1.0, -1.0}}), InvalidArgument);
  CHECK_THROWS_AS(kernel_kind_from_string("henyey"), InvalidArgument);
  const ScatteringKernel k = build_kernel(q1, {});
  CHECK_THROWS_AS(apply_L(k, Eigen::VectorXd(Eigen::VectorXd::Ones(3))), InvalidArgument);
}

TEST_CASE("apply_L examples") {
  std::mt19937_64 rng(7);
  for (auto [d, spec] : kernels()) {
    const ScatteringKernel k = build_kernel(build_quadrature(d, 8), spec);
    const auto m = static_cast<Eigen::Index>(k.size());
    CHECK(apply_L(k, Eigen::VectorXd(Eigen::VectorXd::Ones(m))).cwiseAbs().maxCoeff() < 1e-10);
  }
  // Isotropic: L phi = phi - <phi>.
  for (int d : {1, 2}) {
    const Quadrature q = build_quadrature(d, 8);
    const ScatteringKernel k = build_kernel(q, {});
    const Eigen::VectorXd phi = random_vector(static_cast<Eigen::Index>(q.size()), rng);
    const double mean = q.weights().dot(phi) / q.sphere_measure();
    CHECK((apply_L(k, phi) - (phi.array() - mean).matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Rayleigh: L omega = omega.
  const Quadrature q = build_quadrature(2, 8);
  const ScatteringKernel ray = build_kernel(q, {KernelKind::rayleigh_d2, {}});
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd w = q.nodes().col(c);
    CHECK((apply_L(ray, w) - w).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("property: self-adjoint, bounded, coercive") {
  std::mt19937_64 rng(2024);
  for (auto [d, spec] : kernels()) {
    const ScatteringKernel k = build_kernel(build_quadrature(d, 8), spec);
    const Quadrature& q = k.quadrature();
    const OmegaSolution om = solve_omega(k);
    const auto m = static_cast<Eigen::Index>(q.size());
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::VectorXd a = random_vector(m, rng), b = random_vector(m, rng);
      const double lhs = w_inner(q, a, apply_L(k, b));
      const double rhs = w_inner(q, apply_L(k, a), b);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::sqrt(w_inner(q, a, a) * w_inner(q, b, b)));
      // |L a|_w <= 2 |a|_w.
      const Eigen::VectorXd La = apply_L(k, a);
      CHECK(w_inner(q, La, La) <= 4.0 * w_inner(q, a, a) * (1 + 1e-12));
      // Dirichlet form = <a L a> >= gap |a - <a>|^2.
      const double form = dirichlet_form(k, a.cast<std::complex<double>>());
      CHECK(form == doctest::Approx(w_inner(q, a, La)).epsilon(1e-10));
      const double mean = q.weights().dot(a) / q.sphere_measure();
      const Eigen::VectorXd centered = a.array() - mean;
      CHECK(form >= om.gap * w_inner(q, centered, centered) * (1 - 1e-10));
    }
    CHECK(dirichlet_form(k, Eigen::VectorXcd::Constant(m, {2.0, -1.0})) == doctest::Approx(0.0).scale(1.0));
  }
}

TEST_CASE("Dirichlet form of omega_y for isotropic d=2") {
  const Quadrature q = build_quadrature(2, 8);
  const ScatteringKernel k = build_kernel(q, {});
  const Eigen::VectorXcd wy = q.nodes().col(2).cast<std::complex<double>>();
  CHECK(dirichlet_form(k, wy) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("solve_omega: identity cases") {
  for (auto [d, spec] : {std::pair<int, KernelSpec>{1, {}}, {2, {}}, {2, {KernelKind::rayleigh_d2, {}}}}) {
    const ScatteringKernel k = build_kernel(build_quadrature(d, 16), spec);
    const OmegaSolution om = solve_omega(k);
    CHECK((om.omega_field - k.quadrature().nodes()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(om.transport_coeff == doctest::Approx(1.0).epsilon(1e-10));
    if (spec.kind == KernelKind::isotropic) CHECK(om.gap == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(om.gap > 0.0);
  }
}

TEST_CASE("solve_omega against a brute-force pseudoinverse") {
  for (auto [d, spec] : kernels()) {
    const ScatteringKernel k = build_kernel(build_quadrature(d, 8), spec);
    const Quadrature& q = k.quadrature();
    const auto m = static_cast<Eigen::Index>(q.size());
    const Eigen::MatrixXd L = Eigen::MatrixXd::Identity(m, m) - k.gain();
    // Minimum-norm least squares in the plain Euclidean metric, then projected to w-mean zero.
    const Eigen::MatrixXd pinv = L.completeOrthogonalDecomposition().pseudoInverse();
    const OmegaSolution om = solve_omega(k);
    for (int c = 0; c <= d; ++c) {
      Eigen::VectorXd x = pinv * q.nodes().col(c);
      x.array() -= q.weights().dot(x) / q.weights().sum();
      CHECK((x - om.omega_field.col(c)).cwiseAbs().maxCoeff() < 1e-10);
    }
    // <omega (x) Omega> is isotropic.
    const Eigen::MatrixXd D = diffusion_matrix(k, om);
    const Eigen::MatrixXd iso = om.transport_coeff / (d + 1.0) * Eigen::MatrixXd::Identity(d + 1, d + 1);
    CHECK((D - iso).norm() < 1e-8);
    CHECK(om.transport_coeff == doctest::Approx(D.trace()).epsilon(1e-12));
  }
}

TEST_CASE("spectrum: one zero, all in [0, 2]") {
  for (auto [d, spec] : kernels()) {
    const Eigen::VectorXd ev = operator_spectrum(build_kernel(build_quadrature(d, 8), spec));
    CHECK(std::abs(ev(0)) < 1e-10);
    CHECK(ev(1) > 1e-6);
    CHECK(ev(ev.size() - 1) <= 2.0 + 1e-9);
  }
}

TEST_CASE("operator audit at n = 16") {
  for (auto [d, spec] : {std::pair<int, KernelSpec>{1, {}}, {2, {}}, {2, {KernelKind::rayleigh_d2, {}}}}) {
    const OperatorAudit a = audit_operator(d, 16, spec, 99);
    CHECK(a.operator_pass());
    CHECK(a.omega_pass());
    CHECK(a.nullspace_dimension == 1);
    CHECK(a.null_vector_defect < 1e-8);
    CHECK(a.pseudoinverse_error < 1e-10);
    CHECK(a.dirichlet_defect < 1e-10);
    CHECK(a.coercivity_margin >= -1e-12);
  }
  // Rayleigh gap is an output of the discrete operator; 9/10 for the exact kernel.
  CHECK(audit_operator(2, 16, {KernelKind::rayleigh_d2, {}}).gap == doctest::Approx(0.9).epsilon(1e-8));
}
