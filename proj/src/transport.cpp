#include "kinfrac/transport.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "banded_solver.hpp"
#include "kinfrac/errors.hpp"

namespace kinfrac {

using cplx = std::complex<double>;

PhysicalConstants PhysicalConstants::nondimensional() { return {}; }

PhysicalConstants PhysicalConstants::si_units() {
  PhysicalConstants pc;
  pc.c = 299792458.0;
  pc.k_B = 1.380649e-23;
  pc.hbar = 1.054571817e-34;
  const double pi = std::numbers::pi;
  pc.a = 8.0 * std::pow(pi, 5) * std::pow(pc.k_B, 4) /
         (15.0 * pc.c * pc.c * std::pow(pc.hbar, 3));
  pc.si = true;
  return pc;
}

std::vector<double> graded_ygrid(double depth, int cells, double first_cell, double growth) {
  if (!(depth > 0.0)) throw InvalidArgument("graded_ygrid: depth must be positive");
  if (cells < 1) throw InvalidArgument("graded_ygrid: need at least one cell");
  if (!(growth > 1.0)) throw InvalidArgument("graded_ygrid: growth ratio must exceed 1");
  std::vector<double> y(static_cast<std::size_t>(cells) + 1);

  auto uniform = [&] {
    for (int j = 0; j <= cells; ++j) y[static_cast<std::size_t>(j)] = depth * j / cells;
    y.back() = depth;
    return y;
  };
  if (!(first_cell > 0.0) || depth / cells <= first_cell) return uniform();

  // Geometric cells h0 q^i until they reach spacing h, then uniform cells of width h.
  // Choose h by bisection so the total cell count is `cells`.
  const double log_q = std::log(growth);
  auto geometric_count = [&](double h) {
    return std::max(0, static_cast<int>(std::ceil(std::log(h / first_cell) / log_q)));
  };
  auto length_for = [&](double h) {
    const int m = std::min(geometric_count(h), cells);
    const double geo = first_cell * (std::pow(growth, m) - 1.0) / (growth - 1.0);
    return geo + (cells - m) * h;
  };
  double lo = first_cell;
  double hi = depth;
  if (length_for(lo) >= depth) return uniform();
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (length_for(mid) < depth ? lo : hi) = mid;
  }
  const double h = hi;
  const int m = std::min(geometric_count(h), cells);
  y[0] = 0.0;
  double width = first_cell;
  for (int j = 0; j < m; ++j) {
    y[static_cast<std::size_t>(j) + 1] = y[static_cast<std::size_t>(j)] + width;
    width *= growth;
  }
  const double rest = depth - y[static_cast<std::size_t>(m)];
  for (int j = m; j < cells; ++j)
    y[static_cast<std::size_t>(j) + 1] = y[static_cast<std::size_t>(m)] + rest * (j - m + 1) / (cells - m);
  y.back() = depth;
  return y;
}

void TransportProblem::validate() const {
  if (!(sigma > 0.0)) throw InvalidArgument("TransportProblem: sigma must be positive");
  if (!(kappa > 0.0)) throw InvalidArgument("TransportProblem: kappa must be positive");
  if (!(lambda >= 0.0)) throw InvalidArgument("TransportProblem: lambda must be nonnegative");
  if (modes.empty()) throw InvalidArgument("TransportProblem: empty mode set");
  if (modes.size() != source_hat.size())
    throw InvalidArgument("TransportProblem: source_hat must have one value per mode");
  if (ygrid.size() < 2 || ygrid.front() != 0.0)
    throw InvalidArgument("TransportProblem: ygrid must start at 0 and have at least one cell");
  for (std::size_t j = 1; j < ygrid.size(); ++j)
    if (!(ygrid[j] > ygrid[j - 1]))
      throw InvalidArgument("TransportProblem: ygrid must be strictly increasing");
  const double first = ygrid[1] - ygrid[0];
  const double uniform = ygrid.back() / static_cast<double>(ygrid.size() - 1);
  if (first > std::min(1.0 / sigma, uniform) * (1.0 + 1e-12))
    throw InvalidArgument("TransportProblem: first y-cell does not resolve the boundary layer");
  if (!(options.tolerance > 0.0)) throw InvalidArgument("SolverOptions: tolerance must be positive");
}

TransportProblem make_transport_problem(ScatteringKernel kernel, double sigma, double kappa,
                                        std::vector<ModeIndex> modes,
                                        std::vector<cplx> source_hat, const GridOptions& grid,
                                        double lambda, SolverOptions options) {
  double slowest = 0.0;
  for (const auto& k : modes) {
    const double n = mode_norm(k);
    if (n > 0.0 && (slowest == 0.0 || n < slowest)) slowest = n;
  }
  const double decay_length = slowest > 0.0 ? 1.0 / (2.0 * std::numbers::pi * slowest) : 1.0;
  if (!(sigma > 0.0)) throw InvalidArgument("TransportProblem: sigma must be positive");
  const double depth = grid.depth_in_decay_lengths * decay_length;
  const double first = std::min(grid.first_cell_factor / sigma, depth / grid.cells);
  TransportProblem p{std::move(kernel), sigma, kappa, lambda, std::move(modes),
                     std::move(source_hat), graded_ygrid(depth, grid.cells, first, grid.growth),
                     options};
  p.validate();
  return p;
}

namespace {

// Exact cell integration for one direction along the upwind coordinate t in [0, 1].
// With tau = (lambda + sigma + i phase) width / mu and g = sigma / (lambda + sigma + i phase),
// a source Q(t) = Qm + Qs (2t - 1) and inflow value u give
//   mean  = a1 u + g (b1 Qm + c1 Qs)
//   slope = a2 u + g (b2 Qm + c2 Qs)          (Legendre slope of h in t)
//   out   = e  u + g (d1 Qm + d2 Qs)
struct CellCoefficients {
  cplx tau;
  cplx g;
  cplx e;
  cplx a1, b1, c1;
  cplx a2, b2, c2;
  cplx d1, d2;
};

CellCoefficients cell_coefficients(double sigma, double lambda, double phase, double mu,
                                   double width) {
  const cplx rate{lambda + sigma, phase};
  const cplx tau = rate * width / mu;
  CellCoefficients c;
  c.tau = tau;
  c.g = sigma / rate;
  c.e = std::exp(-tau);
  // m0 = int e^{-tau t}, m1 = int t e^{-tau t}, r0 = (m0 - 1)/tau, r1 = (2 m1 - m0)/tau.
  cplx m0, m1, r0, r1;
  if (std::abs(tau) < 0.5) {
    m0 = m1 = r0 = r1 = 0.0;
    cplx term = 1.0;  // (-tau)^k / k!
    for (int k = 0; k <= 30; ++k) {
      if (k > 0) term *= -tau / static_cast<double>(k);
      m0 += term / (k + 1.0);
      m1 += term / (k + 2.0);
      if (k >= 1) {
        const cplx lower = term / tau;  // (-1)^k tau^{k-1} / k!
        r0 += lower / (k + 1.0);
        r1 += lower * static_cast<double>(k) / ((k + 1.0) * (k + 2.0));
      }
    }
  } else {
    m0 = (1.0 - c.e) / tau;
    m1 = (1.0 - c.e * (1.0 + tau)) / (tau * tau);
    r0 = (m0 - 1.0) / tau;
    r1 = (2.0 * m1 - m0) / tau;
  }
  const cplx q = r1 * tau;  // 2 m1 - m0
  c.a1 = m0;
  c.b1 = 1.0 - m0;
  c.c1 = m0 + 2.0 * r0;
  c.a2 = 3.0 * q;
  c.b2 = -3.0 * q;
  c.c2 = 1.0 + 3.0 * q + 6.0 * r1;
  c.d1 = 1.0 - c.e;
  c.d2 = 1.0 + c.e - 2.0 * m0;
  return c;
}

struct ModeGeometry {
  std::vector<double> phase;  // 2 pi k . omega_x per direction
  std::vector<double> mu;     // |omega_y|
  std::vector<double> sign;   // sign of omega_y
};

ModeGeometry mode_geometry(const Quadrature& q, const ModeIndex& k) {
  ModeGeometry g;
  const int d = q.dimension();
  for (std::size_t i = 0; i < q.size(); ++i) {
    double ox[2] = {q.omega_x(i, 0), d == 2 ? q.omega_x(i, 1) : 0.0};
    g.phase.push_back(mode_phase(k, std::span<const double>(ox, static_cast<std::size_t>(d))));
    g.mu.push_back(std::abs(q.omega_y(i)));
    g.sign.push_back(q.omega_y(i) > 0.0 ? 1.0 : -1.0);
  }
  return g;
}

// Node values plus per-cell mean and y-slope (Legendre) of each direction.
struct CellField {
  Eigen::MatrixXcd nodes;  // (N+1) x M
  Eigen::MatrixXcd mean;   // N x M
  Eigen::MatrixXcd slope;  // N x M

  CellField lerp(const CellField& other, cplx t) const {
    return {nodes + t * (other.nodes - nodes), mean + t * (other.mean - mean),
            slope + t * (other.slope - slope)};
  }
};

// Characteristic sweep for a source given by cell means and y-slopes.
CellField sweep_cells(std::span<const double> y, const ModeGeometry& g,
                      const Eigen::VectorXcd& bottom, const Eigen::VectorXcd& top,
                      const Eigen::MatrixXcd& qmean, const Eigen::MatrixXcd& qslope,
                      double lambda, double sigma) {
  const auto m = static_cast<Eigen::Index>(g.mu.size());
  const auto cells = static_cast<Eigen::Index>(y.size()) - 1;
  CellField f{Eigen::MatrixXcd(cells + 1, m), Eigen::MatrixXcd(cells, m),
              Eigen::MatrixXcd(cells, m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const bool up = g.sign[si] > 0.0;
    f.nodes(up ? 0 : cells, i) = up ? bottom(i) : top(i);
    for (Eigen::Index step = 0; step < cells; ++step) {
      const Eigen::Index j = up ? step : cells - 1 - step;
      const auto cc = cell_coefficients(sigma, lambda, g.phase[si], g.mu[si],
                                        y[static_cast<std::size_t>(j) + 1] - y[static_cast<std::size_t>(j)]);
      const cplx u = f.nodes(up ? j : j + 1, i);
      const cplx qm = qmean(j, i);
      const cplx qs = g.sign[si] * qslope(j, i);
      f.mean(j, i) = cc.a1 * u + cc.g * (cc.b1 * qm + cc.c1 * qs);
      f.slope(j, i) = g.sign[si] * (cc.a2 * u + cc.g * (cc.b2 * qm + cc.c2 * qs));
      f.nodes(up ? j + 1 : j, i) = cc.e * u + cc.g * (cc.d1 * qm + cc.d2 * qs);
    }
  }
  return f;
}

// Largest violation of the per-cell zeroth and first moment balances, relative to max |f|.
double cell_residual(std::span<const double> y, const ModeGeometry& g, const CellField& f,
                     const Eigen::MatrixXd& gain, double lambda, double sigma) {
  const Eigen::MatrixXcd gain_t = gain.transpose().cast<cplx>();
  const Eigen::MatrixXcd qmean = f.mean * gain_t;
  const Eigen::MatrixXcd qslope = f.slope * gain_t;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < f.mean.rows(); ++j)
    for (Eigen::Index i = 0; i < f.mean.cols(); ++i) {
      const auto si = static_cast<std::size_t>(i);
      const bool up = g.sign[si] > 0.0;
      const auto cc = cell_coefficients(sigma, lambda, g.phase[si], g.mu[si],
                                        y[static_cast<std::size_t>(j) + 1] - y[static_cast<std::size_t>(j)]);
      const cplx u = f.nodes(up ? j : j + 1, i);
      const cplx v = f.nodes(up ? j + 1 : j, i);
      const cplx hs = g.sign[si] * f.slope(j, i);
      const cplx qs = g.sign[si] * qslope(j, i);
      const cplx zeroth = (v - u) + cc.tau * (f.mean(j, i) - cc.g * qmean(j, i));
      const cplx first = (v + u - 2.0 * f.mean(j, i)) + cc.tau * (hs - cc.g * qs) / 3.0;
      worst = std::max({worst, std::abs(zeroth), std::abs(first)});
    }
  const double scale = f.nodes.cwiseAbs().maxCoeff();
  return scale > 0.0 ? worst / scale : worst;
}

// One transport solve T(H): the incoming value H is applied to every upward direction.
class InnerTransport {
 public:
  InnerTransport(const TransportProblem& p, const ModeIndex& k)
      : p_(p), q_(p.kernel.quadrature()), geometry_(mode_geometry(q_, k)) {
    if (p.options.inner == InnerSolver::direct) assemble();
  }

  std::vector<CellField> solve(std::span<const cplx> incoming) {
    std::vector<CellField> out;
    if (p_.options.inner == InnerSolver::direct) {
      Eigen::MatrixXcd rhs =
          Eigen::MatrixXcd::Zero(system_->size(), static_cast<Eigen::Index>(incoming.size()));
      for (std::size_t c = 0; c < incoming.size(); ++c)
        for (std::size_t u = 0; u < q_.upward().size(); ++u)
          rhs(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(c)) = incoming[c];
      const Eigen::MatrixXcd x = system_->solve(rhs);
      for (std::size_t c = 0; c < incoming.size(); ++c)
        out.push_back(unpack(x.col(static_cast<Eigen::Index>(c))));
      return out;
    }
    for (cplx h : incoming) out.push_back(source_iteration(h));
    return out;
  }

  const ModeGeometry& geometry() const { return geometry_; }
  int iterations() const { return iterations_; }

 private:
  Eigen::Index directions() const { return static_cast<Eigen::Index>(q_.size()); }
  Eigen::Index cells() const { return static_cast<Eigen::Index>(p_.ygrid.size()) - 1; }
  double width(Eigen::Index j) const {
    return p_.ygrid[static_cast<std::size_t>(j) + 1] - p_.ygrid[static_cast<std::size_t>(j)];
  }

  CellField source_iteration(cplx incoming) {
    const Eigen::Index m = directions();
    const Eigen::Index n = cells();
    const Eigen::MatrixXcd gain_t = p_.kernel.gain().transpose().cast<cplx>();
    Eigen::MatrixXcd qmean = Eigen::MatrixXcd::Zero(n, m);
    Eigen::MatrixXcd qslope = Eigen::MatrixXcd::Zero(n, m);
    if (p_.options.initial_source_seed != 0) {
      std::mt19937_64 rng(p_.options.initial_source_seed);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i) qmean(j, i) = cplx(dist(rng), dist(rng));
    }
    const Eigen::VectorXcd bottom = Eigen::VectorXcd::Constant(m, incoming);
    const Eigen::VectorXcd top = Eigen::VectorXcd::Zero(m);
    for (int it = 1; it <= p_.options.max_iterations; ++it) {
      CellField f = sweep_cells(p_.ygrid, geometry_, bottom, top, qmean, qslope, p_.lambda, p_.sigma);
      Eigen::MatrixXcd next_mean = f.mean * gain_t;
      Eigen::MatrixXcd next_slope = f.slope * gain_t;
      const double change = std::max((next_mean - qmean).cwiseAbs().maxCoeff(),
                                     (next_slope - qslope).cwiseAbs().maxCoeff());
      const double scale = std::max(next_mean.cwiseAbs().maxCoeff(), 1e-300);
      qmean = std::move(next_mean);
      qslope = std::move(next_slope);
      iterations_ += 1;
      if (change <= p_.options.tolerance * scale)
        return sweep_cells(p_.ygrid, geometry_, bottom, top, qmean, qslope, p_.lambda, p_.sigma);
    }
    throw SolverError("source iteration did not converge in " +
                      std::to_string(p_.options.max_iterations) + " iterations");
  }

  // Per cell the moments X = (mean, y-slope) satisfy X = D u + G X, u the inflow values,
  // and the outflow is v = E u + W X. Eliminating X gives v = T u with T = E + W Z,
  // Z = (I - G)^{-1} D; only node values enter the banded system.
  void assemble() {
    const Eigen::Index m = directions();
    const Eigen::Index n = cells();
    const int mi = static_cast<int>(m);
    const int mu = static_cast<int>(q_.upward().size());
    system_.emplace(static_cast<int>((n + 1) * m), mu + mi - 1, 2 * mi - 1 - mu);
    const Eigen::MatrixXcd K = p_.kernel.gain().cast<cplx>();
    eliminators_.resize(static_cast<std::size_t>(n));

    for (int u = 0; u < mu; ++u)
      system_->add(u, static_cast<int>(q_.upward()[static_cast<std::size_t>(u)]), 1.0);
    Eigen::MatrixXcd G(2 * m, 2 * m);
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(2 * m, m);
    Eigen::MatrixXcd W(m, 2 * m);
    Eigen::VectorXcd E(m);
    for (Eigen::Index j = 0; j < n; ++j) {
      D.setZero();
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto si = static_cast<std::size_t>(i);
        const double s = geometry_.sign[si];
        const auto cc = cell_coefficients(p_.sigma, p_.lambda, geometry_.phase[si], geometry_.mu[si], width(j));
        G.row(i).head(m) = cc.g * cc.b1 * K.row(i);
        G.row(i).tail(m) = cc.g * cc.c1 * s * K.row(i);
        G.row(m + i).head(m) = s * cc.g * cc.b2 * K.row(i);
        G.row(m + i).tail(m) = cc.g * cc.c2 * K.row(i);
        D(i, i) = cc.a1;
        D(m + i, i) = s * cc.a2;
        W.row(i).head(m) = cc.g * cc.d1 * K.row(i);
        W.row(i).tail(m) = cc.g * cc.d2 * s * K.row(i);
        E(i) = cc.e;
      }
      const Eigen::MatrixXcd I2 = Eigen::MatrixXcd::Identity(2 * m, 2 * m);
      Eigen::MatrixXcd Z = Eigen::PartialPivLU<Eigen::MatrixXcd>(I2 - G).solve(D);
      Eigen::MatrixXcd T = W * Z;
      T.diagonal() += E;
      const int jj = static_cast<int>(j);
      for (int i = 0; i < mi; ++i) {
        const bool up = geometry_.sign[static_cast<std::size_t>(i)] > 0.0;
        const int row = mu + jj * mi + i;
        system_->add(row, (up ? jj + 1 : jj) * mi + i, 1.0);
        for (int l = 0; l < mi; ++l) {
          const bool lup = geometry_.sign[static_cast<std::size_t>(l)] > 0.0;
          system_->add(row, (lup ? jj : jj + 1) * mi + l, -T(i, l));
        }
      }
      eliminators_[static_cast<std::size_t>(j)] = std::move(Z);
    }
    const int md = static_cast<int>(q_.downward().size());
    const int top = static_cast<int>(n) * mi;
    for (int dd = 0; dd < md; ++dd)
      system_->add(mu + top + dd, top + static_cast<int>(q_.downward()[static_cast<std::size_t>(dd)]), 1.0);
    system_->factor();
  }

  CellField unpack(const Eigen::VectorXcd& x) const {
    const Eigen::Index m = directions();
    const Eigen::Index n = cells();
    CellField f{Eigen::MatrixXcd(n + 1, m), Eigen::MatrixXcd(n, m), Eigen::MatrixXcd(n, m)};
    for (Eigen::Index j = 0; j <= n; ++j) f.nodes.row(j) = x.segment(j * m, m).transpose();
    Eigen::VectorXcd u(m);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < m; ++i)
        u(i) = f.nodes(geometry_.sign[static_cast<std::size_t>(i)] > 0.0 ? j : j + 1, i);
      const Eigen::VectorXcd X = eliminators_[static_cast<std::size_t>(j)] * u;
      f.mean.row(j) = X.head(m).transpose();
      f.slope.row(j) = X.tail(m).transpose();
    }
    return f;
  }

  const TransportProblem& p_;
  const Quadrature& q_;
  ModeGeometry geometry_;
  std::optional<detail::BandedSystem> system_;
  std::vector<Eigen::MatrixXcd> eliminators_;
  int iterations_ = 0;
};

cplx outgoing_moment(const Quadrature& q, const Eigen::MatrixXcd& F) {
  const Eigen::VectorXcd wall = F.row(0).transpose();
  return half_moment(q, as_span(wall), HalfRange::lower);
}

}  // namespace

Eigen::MatrixXcd sweep_characteristics(const Quadrature& q, std::span<const double> ygrid,
                                       const ModeIndex& k, const Eigen::VectorXcd& bottom,
                                       const Eigen::VectorXcd& top, const Eigen::MatrixXcd& Q,
                                       double lambda, double sigma) {
  const auto m = static_cast<Eigen::Index>(q.size());
  const auto levels = static_cast<Eigen::Index>(ygrid.size());
  if (levels < 2) throw InvalidArgument("sweep_characteristics: need at least one cell");
  if (Q.rows() != levels || Q.cols() != m)
    throw InvalidArgument("sweep_characteristics: source must be (levels x directions)");
  if (bottom.size() != m || top.size() != m)
    throw InvalidArgument("sweep_characteristics: boundary data must have one value per direction");
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q.omega_y(i) == 0.0) throw InvalidArgument("sweep_characteristics: grazing direction");
  const Eigen::MatrixXcd qmean = 0.5 * (Q.topRows(levels - 1) + Q.bottomRows(levels - 1));
  const Eigen::MatrixXcd qslope = 0.5 * (Q.bottomRows(levels - 1) - Q.topRows(levels - 1));
  return sweep_cells(ygrid, mode_geometry(q, k), bottom, top, qmean, qslope, lambda, sigma).nodes;
}

ModeSolution solve_mode(const TransportProblem& p, std::size_t mode) {
  if (mode >= p.modes.size()) throw InvalidArgument("solve_mode: mode index out of range");
  const Quadrature& q = p.kernel.quadrature();
  const ModeIndex k = p.modes[mode];
  const cplx source = p.source_hat[mode];
  const double beta = p.beta();
  const auto m = static_cast<Eigen::Index>(q.size());
  const auto levels = static_cast<Eigen::Index>(p.ygrid.size());
  const std::string where = "mode k=" + to_string(k, p.dimension()) + ": ";

  ModeSolution s;
  s.k = k;
  auto incoming_for = [&](cplx moment) { return source / (1.0 + beta) + beta / (1.0 + beta) * moment; };

  if (k[0] == 0 && k[1] == 0 && p.lambda == 0.0) {
    s.fhat = Eigen::MatrixXcd::Constant(levels, m, source);
    s.trace_in = source;
    s.analytic = true;
    s.boundary_contraction = beta / (1.0 + beta);
  } else {
    InnerTransport inner(p, k);
    CellField field;
    try {
      if (p.options.boundary == BoundaryScheme::affine) {
        const cplx probes[2] = {incoming_for(0.0), incoming_for(1.0)};
        auto fields = inner.solve(probes);
        const cplx a = outgoing_moment(q, fields[0].nodes);
        const cplx b = outgoing_moment(q, fields[1].nodes) - a;
        s.boundary_contraction = std::abs(b);
        if (!(std::abs(b) < 1.0))
          throw SolverError("re-emission map is not contracting (|b| = " +
                            std::to_string(std::abs(b)) + ")");
        const cplx fixed = a / (1.0 - b);
        field = fields[0].lerp(fields[1], fixed);
        s.trace_in = incoming_for(fixed);
        s.boundary_iterations = 1;
      } else {
        cplx moment = p.options.initial_boundary_moment;
        bool converged = false;
        for (int it = 1; it <= p.options.max_iterations; ++it) {
          const cplx h = incoming_for(moment);
          field = std::move(inner.solve(std::span<const cplx>(&h, 1))[0]);
          const cplx next = outgoing_moment(q, field.nodes);
          s.boundary_iterations = it;
          const double scale = std::max({std::abs(next), std::abs(source), 1e-300});
          const double change = std::abs(next - moment);
          moment = next;
          if (change <= p.options.tolerance * scale) {
            const cplx hn = incoming_for(moment);
            field = std::move(inner.solve(std::span<const cplx>(&hn, 1))[0]);
            s.trace_in = hn;
            converged = true;
            break;
          }
        }
        if (!converged)
          throw SolverError("albedo fixed-point iteration did not converge in " +
                            std::to_string(p.options.max_iterations) + " iterations");
      }
    } catch (const SolverError& e) {
      throw SolverError(where + e.what());
    }
    s.inner_iterations = inner.iterations();
    s.transport_residual =
        cell_residual(p.ygrid, inner.geometry(), field, p.kernel.gain(), p.lambda, p.sigma);
    s.fhat = std::move(field.nodes);
  }

  const Eigen::VectorXcd wall = s.fhat.row(0).transpose();
  const cplx reemitted = incoming_for(half_moment(q, as_span(wall), HalfRange::lower));
  for (std::size_t u : q.upward())
    s.boundary_residual = std::max(s.boundary_residual, std::abs(wall(static_cast<Eigen::Index>(u)) - reemitted));

  s.density_hat = s.fhat * q.weights().cast<cplx>() / q.sphere_measure();
  s.current_hat = p.sigma * (s.fhat.colwise() - s.density_hat);
  return s;
}

std::vector<ModeSolution> solve_all_modes(const TransportProblem& p, int threads) {
  p.validate();
  const std::size_t count = p.modes.size();
  std::vector<ModeSolution> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = solve_mode(p, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(threads, 1, static_cast<int>(count));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

double boundary_flux_residual(const TransportProblem& p, std::size_t mode, const ModeSolution& s) {
  const Quadrature& q = p.kernel.quadrature();
  const Eigen::VectorXcd wall = s.fhat.row(0).transpose();
  const cplx outgoing_plus = half_moment(q, as_span(wall), HalfRange::upper);
  cplx normal_flux{0.0, 0.0};  // sum_i w_i omega_y f_i = |S^d| <omega_y f>
  for (std::size_t i = 0; i < q.size(); ++i)
    normal_flux += q.weights()(static_cast<Eigen::Index>(i)) * q.omega_y(i) * wall(static_cast<Eigen::Index>(i));
  const cplx predicted = p.source_hat[mode] - p.beta() * normal_flux / q.half_measure();
  return std::abs(outgoing_plus - predicted);
}

std::vector<double> entropy_flux_profile(const Quadrature& q, const ModeSolution& s) {
  std::vector<double> out(static_cast<std::size_t>(s.fhat.rows()));
  Eigen::VectorXd wy(static_cast<Eigen::Index>(q.size()));
  for (std::size_t i = 0; i < q.size(); ++i)
    wy(static_cast<Eigen::Index>(i)) = q.weights()(static_cast<Eigen::Index>(i)) * q.omega_y(i);
  for (Eigen::Index j = 0; j < s.fhat.rows(); ++j)
    out[static_cast<std::size_t>(j)] = s.fhat.row(j).cwiseAbs2().dot(wy) / q.sphere_measure();
  return out;
}

RealField assemble_field(const TransportProblem& p, std::span<const ModeSolution> solutions,
                         std::span<const TorusPoint> points) {
  if (solutions.size() != p.modes.size())
    throw InvalidArgument("assemble_field: need one solution per mode");
  double scale = 0.0;
  for (const auto& c : p.source_hat) scale = std::max(scale, std::abs(c));
  if (conjugate_symmetry_defect(p.modes, p.source_hat) > 1e-12 * std::max(scale, 1.0))
    throw InvalidArgument("assemble_field: non-conjugate-symmetric mode data");

  RealField field;
  field.points.assign(points.begin(), points.end());
  field.ny = p.ygrid.size();
  field.directions = p.kernel.size();
  field.values.assign(points.size() * field.ny * field.directions, 0.0);
  std::vector<cplx> phases(solutions.size());
  for (std::size_t x = 0; x < points.size(); ++x) {
    for (std::size_t k = 0; k < solutions.size(); ++k) {
      const double arg = 2.0 * std::numbers::pi *
                         (solutions[k].k[0] * points[x][0] + solutions[k].k[1] * points[x][1]);
      phases[k] = cplx(std::cos(arg), std::sin(arg));
    }
    for (std::size_t y = 0; y < field.ny; ++y)
      for (std::size_t i = 0; i < field.directions; ++i) {
        cplx acc{0.0, 0.0};
        for (std::size_t k = 0; k < solutions.size(); ++k)
          acc += solutions[k].fhat(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(i)) * phases[k];
        field.values[(x * field.ny + y) * field.directions + i] = acc.real();
        field.max_imag = std::max(field.max_imag, std::abs(acc.imag()));
      }
  }
  return field;
}

RadiationPressure radiation_pressure(const TransportProblem& p, const RealField& field,
                                     const PhysicalConstants& constants) {
  if (p.dimension() != 2) throw InvalidArgument("radiation_pressure: requires d = 2");
  const Quadrature& q = p.kernel.quadrature();
  RadiationPressure out;
  for (std::size_t x = 0; x < field.points.size(); ++x) {
    Eigen::Matrix3d tensor = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Eigen::Vector3d w = q.nodes().row(static_cast<Eigen::Index>(i)).transpose();
      tensor += q.weights()(static_cast<Eigen::Index>(i)) * field.at(x, 0, i) * (w * w.transpose());
    }
    tensor /= constants.c;
    const double pressure = tensor.trace() / 3.0;
    out.pressure.push_back(pressure);
    out.isotropy_defect.push_back((tensor - pressure * Eigen::Matrix3d::Identity()).norm());
  }
  return out;
}

}  // namespace kinfrac
