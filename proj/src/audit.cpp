#include "kinfrac/audit.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include <Eigen/SVD>

namespace kinfrac {

bool OperatorAudit::operator_pass() const {
  return constant_defect <= 1e-10 && self_adjoint_defect <= 1e-12 && operator_norm <= 2.0 + 1e-9 &&
         nullspace_dimension == 1;
}

bool OperatorAudit::omega_pass() const {
  return omega_error <= 1e-10 && transport_coeff_error <= 1e-10 && isotropy_defect <= 1e-8;
}

OperatorAudit audit_operator(int d, int n, const KernelSpec& spec, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const Quadrature q = build_quadrature(d, n);
  const ScatteringKernel k = build_kernel(q, spec);
  const auto m = static_cast<Eigen::Index>(q.size());
  const Eigen::VectorXd& w = q.weights();
  const double S = q.sphere_measure();

  OperatorAudit a;
  a.dimension = d;
  a.n = n;
  a.kernel = to_string(spec.kind);
  a.directions = q.size();
  a.normalization_defect = k.normalization_defect();
  a.constant_defect = apply_L(k, Eigen::VectorXd(Eigen::VectorXd::Ones(m))).cwiseAbs().maxCoeff();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto random_vector = [&] {
    Eigen::VectorXd v(m);
    for (auto& x : v) x = normal(rng);
    return v;
  };
  auto inner = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) { return (w.array() * u.array() * v.array()).sum() / S; };

  const Eigen::VectorXd phi = random_vector();
  const Eigen::VectorXd psi = random_vector();
  a.self_adjoint_defect = std::abs(inner(phi, apply_L(k, psi)) - inner(apply_L(k, phi), psi)) /
                          std::sqrt(inner(phi, phi) * inner(psi, psi));

  // In the w-weighted inner product L is the symmetric matrix I - W^{1/2} P W^{1/2}.
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd sym =
      Eigen::MatrixXd::Identity(m, m) - sw.asDiagonal() * k.phase() * sw.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sym, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  a.operator_norm = sv(0);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) <= 1e-9) ++a.nullspace_dimension;
  {
    // Null vector back in node values, compared with a normalized constant.
    Eigen::VectorXd v = svd.matrixV().col(m - 1).cwiseQuotient(sw);
    v /= v.cwiseAbs().maxCoeff();
    if (v(0) < 0) v = -v;
    a.null_vector_defect = (v.array() - 1.0).abs().maxCoeff();
  }

  const OmegaSolution om = solve_omega(k);
  a.transport_coeff = om.transport_coeff;
  a.transport_coeff_error = std::abs(om.transport_coeff - 1.0);
  a.gap = om.gap;
  a.omega_error = (om.omega_field - q.nodes()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd D = diffusion_matrix(k, om);
  a.isotropy_defect =
      (D - om.transport_coeff / (d + 1.0) * Eigen::MatrixXd::Identity(d + 1, d + 1)).norm();

  // Brute-force pseudoinverse: Omega = W^{-1/2} pinv(sym) W^{1/2} omega.
  double cutoff = 1e-9;
  Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) pinv += svd.matrixV().col(i) * svd.matrixU().col(i).transpose() / sv(i);
  for (int c = 0; c <= d; ++c) {
    const Eigen::VectorXd omega_c = q.nodes().col(c);
    const Eigen::VectorXd brute = (pinv * sw.cwiseProduct(omega_c)).cwiseQuotient(sw);
    a.pseudoinverse_error = std::max(a.pseudoinverse_error, (brute - om.omega_field.col(c)).cwiseAbs().maxCoeff());
  }

  const Eigen::VectorXd chi = random_vector();
  const double form = dirichlet_form(k, chi.cast<std::complex<double>>());
  const double direct = inner(chi, apply_L(k, chi));
  a.dirichlet_defect = std::abs(form - direct) / std::max(std::abs(direct), 1e-300);
  const double mean = inner(chi, Eigen::VectorXd::Ones(m));
  const Eigen::VectorXd centered = chi.array() - mean;
  a.coercivity_margin = form - om.gap * inner(centered, centered);

  a.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return a;
}

}  // namespace kinfrac
