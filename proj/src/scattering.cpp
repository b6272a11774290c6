#include "kinfrac/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kinfrac/errors.hpp"
#include "kinfrac/gauss_legendre.hpp"
#include "kinfrac/measures.hpp"

namespace kinfrac {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::isotropic: return "isotropic";
    case KernelKind::rayleigh_d2: return "rayleigh-d2";
    case KernelKind::even_polynomial: return "even-polynomial";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "isotropic") return KernelKind::isotropic;
  if (name == "rayleigh-d2" || name == "rayleigh") return KernelKind::rayleigh_d2;
  if (name == "even-polynomial") return KernelKind::even_polynomial;
  throw InvalidArgument("unknown kernel kind '" + name + "'");
}

namespace {

double eval_polynomial(const std::vector<double>& c, double s) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
  return acc;
}

Eigen::VectorXd row_integrals(const Eigen::MatrixXd& phase, const Eigen::VectorXd& w) {
  return phase * w;
}

// Rescale so every row integrates to one while keeping the matrix symmetric:
// first by the mean row integral, then by a symmetric diagonal (Sinkhorn) scaling
// when rows still disagree.
void renormalize(Eigen::MatrixXd& phase, const Eigen::VectorXd& w) {
  phase /= row_integrals(phase, w).mean();
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::VectorXd rows = row_integrals(phase, w);
    if ((rows.array() - 1.0).abs().maxCoeff() < 1e-15) break;
    const Eigen::VectorXd step = rows.array().rsqrt();
    phase = step.asDiagonal() * phase * step.asDiagonal();
  }
  phase = 0.5 * (phase + phase.transpose()).eval();
}

}  // namespace

ScatteringKernel::ScatteringKernel(Quadrature q, KernelSpec spec, Eigen::MatrixXd phase)
    : q_(std::move(q)), spec_(std::move(spec)), phase_(std::move(phase)) {
  gain_ = phase_ * q_.weights().asDiagonal();
}

double ScatteringKernel::normalization_defect() const {
  return (row_integrals(phase_, q_.weights()).array() - 1.0).abs().maxCoeff();
}

ScatteringKernel build_kernel(const Quadrature& q, const KernelSpec& spec) {
  const auto m = static_cast<Eigen::Index>(q.size());
  const int d = q.dimension();
  const Eigen::MatrixXd& nodes = q.nodes();
  Eigen::MatrixXd phase(m, m);

  switch (spec.kind) {
    case KernelKind::isotropic:
      phase.setConstant(1.0 / q.sphere_measure());
      break;
    case KernelKind::rayleigh_d2: {
      if (d != 2) throw InvalidArgument("build_kernel: the Rayleigh phase function requires d = 2");
      const double c = 3.0 / (16.0 * std::numbers::pi);
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) {
          const double mu = nodes.row(i).dot(nodes.row(j));
          phase(i, j) = phase(j, i) = c * (1.0 + mu * mu);
        }
      break;
    }
    case KernelKind::even_polynomial: {
      if (spec.coefficients.empty())
        throw InvalidArgument("build_kernel: even-polynomial kernel needs coefficients");
      // int_0^1 P(mu^2) (1 - mu^2)^{d/2 - 1} dmu, with mu = cos(theta) to remove the
      // endpoint singularity at d = 1.
      const GaussRule rule = gauss_legendre(64, 0.0, std::numbers::pi / 2.0);
      double integral = 0.0;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double theta = rule.nodes[k];
        const double mu = std::cos(theta);
        integral += rule.weights[k] * eval_polynomial(spec.coefficients, mu * mu) *
                    std::pow(std::sin(theta), d - 1);
      }
      if (!(std::abs(integral) > 1e-300))
        throw InvalidArgument("build_kernel: normalization integral of P vanishes");
      const double c = 1.0 / (2.0 * sphere_measure(d - 1) * integral);
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i; j < m; ++j) {
          const double mu = nodes.row(i).dot(nodes.row(j));
          phase(i, j) = phase(j, i) = c * eval_polynomial(spec.coefficients, mu * mu);
        }
      break;
    }
  }

  if (!(phase.minCoeff() > 0.0))
    throw InvalidArgument("build_kernel: phase function has nonpositive values on the nodes");
  renormalize(phase, q.weights());
  return ScatteringKernel(q, spec, std::move(phase));
}

Eigen::VectorXd apply_L(const ScatteringKernel& k, const Eigen::VectorXd& phi) {
  if (static_cast<std::size_t>(phi.size()) != k.size())
    throw InvalidArgument("apply_L: node-value length mismatch");
  return phi - k.gain() * phi;
}

Eigen::VectorXcd apply_L(const ScatteringKernel& k, const Eigen::VectorXcd& phi) {
  if (static_cast<std::size_t>(phi.size()) != k.size())
    throw InvalidArgument("apply_L: node-value length mismatch");
  return phi - k.gain().cast<std::complex<double>>() * phi;
}

double dirichlet_form(const ScatteringKernel& k, const Eigen::VectorXcd& phi) {
  if (static_cast<std::size_t>(phi.size()) != k.size())
    throw InvalidArgument("dirichlet_form: node-value length mismatch");
  const Eigen::VectorXd& w = k.quadrature().weights();
  const auto m = phi.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      acc += w(i) * w(j) * k.phase()(i, j) * std::norm(phi(i) - phi(j));
  return acc / (2.0 * k.quadrature().sphere_measure());
}

Eigen::VectorXd operator_spectrum(const ScatteringKernel& k) {
  const Eigen::VectorXd sw = k.quadrature().weights().cwiseSqrt();
  const auto m = static_cast<Eigen::Index>(k.size());
  Eigen::MatrixXd sym = Eigen::MatrixXd::Identity(m, m) -
                        sw.asDiagonal() * k.phase() * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

OmegaSolution solve_omega(const ScatteringKernel& k) {
  const Quadrature& q = k.quadrature();
  const auto m = static_cast<Eigen::Index>(k.size());
  const int comps = q.dimension() + 1;

  Eigen::MatrixXd bordered = Eigen::MatrixXd::Zero(m + 1, m + 1);
  bordered.topLeftCorner(m, m) = Eigen::MatrixXd::Identity(m, m) - k.gain();
  bordered.block(0, m, m, 1).setOnes();
  bordered.block(m, 0, 1, m) = q.weights().transpose();

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + 1, comps);
  rhs.topRows(m) = q.nodes();

  Eigen::FullPivLU<Eigen::MatrixXd> lu(bordered);
  if (!lu.isInvertible())
    throw SolverError("solve_omega: L is singular beyond the constants (kernel not positive?)");
  const Eigen::MatrixXd sol = lu.solve(rhs);

  OmegaSolution out;
  out.omega_field = sol.topRows(m);
  const Eigen::MatrixXd resid =
      out.omega_field - k.gain() * out.omega_field - q.nodes();
  for (int c = 0; c < comps; ++c) {
    const double r = std::sqrt(q.weights().dot(resid.col(c).cwiseAbs2()) / q.sphere_measure());
    out.residual = std::max(out.residual, r);
  }
  out.transport_coeff =
      q.weights().dot(q.nodes().cwiseProduct(out.omega_field).rowwise().sum()) /
      q.sphere_measure();

  const Eigen::VectorXd spectrum = operator_spectrum(k);
  out.gap = spectrum(1);
  if (!(out.gap > 1e-12))
    throw SolverError("solve_omega: nullspace of L is larger than the constants");
  return out;
}

Eigen::MatrixXd diffusion_matrix(const ScatteringKernel& k, const OmegaSolution& s) {
  const Quadrature& q = k.quadrature();
  return q.nodes().transpose() * q.weights().asDiagonal() * s.omega_field / q.sphere_measure();
}

}  // namespace kinfrac
