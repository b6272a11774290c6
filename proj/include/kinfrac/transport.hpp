#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kinfrac/fourier.hpp"
#include "kinfrac/physical.hpp"
#include "kinfrac/quadrature.hpp"
#include "kinfrac/scattering.hpp"

namespace kinfrac {

/// How the scattering coupling Q = K f is resolved inside one transport solve.
enum class InnerSolver {
  direct,            ///< banded solve of the coupled (y_j, omega_i) system
  source_iteration,  ///< fixed point Q -> K h, h the characteristic sweep of Q
};

/// How the albedo boundary value is resolved.
enum class BoundaryScheme {
  affine,       ///< the outgoing half-moment is affine in the re-emitted value; solve it exactly
  fixed_point,  ///< iterate the re-emission map until it stops moving
};

struct SolverOptions {
  InnerSolver inner = InnerSolver::direct;
  BoundaryScheme boundary = BoundaryScheme::affine;
  double tolerance = 1e-10;
  int max_iterations = 200000;
  /// Starting half-moment for the fixed-point boundary iteration.
  double initial_boundary_moment = 0.0;
  /// Nonzero seeds a random initial scattering source for source iteration.
  std::uint64_t initial_source_seed = 0;
};

struct GridOptions {
  int cells = 200;
  /// Domain depth in units of the slowest decay length 1 / (2 pi |k|_min).
  double depth_in_decay_lengths = 4.0;
  /// First cell is first_cell_factor / sigma when that is finer than uniform spacing.
  double first_cell_factor = 0.25;
  double growth = 1.1;
};

/// Graded grid 0 = y_0 < ... < y_N = depth: geometric cells of ratio `growth`
/// starting from `first_cell`, then uniform. Falls back to a uniform grid when
/// the uniform spacing is already finer than `first_cell`.
std::vector<double> graded_ygrid(double depth, int cells, double first_cell, double growth = 1.1);

/// Per-mode half-space transport problem
///   omega . grad f + lambda f + sigma L f = 0,
///   f(x,0,omega) = S/(1+beta) + beta/(1+beta) <<f(x,0,.)>>_-  for omega_y > 0,
/// with beta = kappa sigma, truncated at y = ygrid.back() with no incoming radiation there.
struct TransportProblem {
  ScatteringKernel kernel;
  double sigma = 1.0;
  double kappa = 1.0;
  double lambda = 0.0;
  std::vector<ModeIndex> modes;
  std::vector<std::complex<double>> source_hat;
  std::vector<double> ygrid;
  SolverOptions options;

  int dimension() const { return kernel.quadrature().dimension(); }
  double beta() const { return kappa * sigma; }
  /// alpha = kappa sigma / (1 + kappa sigma).
  double albedo() const { return beta() / (1.0 + beta()); }

  /// Throws InvalidArgument if any field is out of range.
  void validate() const;
};

TransportProblem make_transport_problem(ScatteringKernel kernel, double sigma, double kappa,
                                        std::vector<ModeIndex> modes,
                                        std::vector<std::complex<double>> source_hat,
                                        const GridOptions& grid = {}, double lambda = 0.0,
                                        SolverOptions options = {});

struct ModeSolution {
  ModeIndex k{0, 0};
  /// (N+1) x M values fhat(k, y_j, omega_i).
  Eigen::MatrixXcd fhat;
  /// Incoming boundary value (the same for every omega_y > 0).
  std::complex<double> trace_in{0.0, 0.0};
  /// <fhat>(k, y_j).
  Eigen::VectorXcd density_hat;
  /// sigma (fhat - <fhat>).
  Eigen::MatrixXcd current_hat;
  double boundary_residual = 0.0;
  double transport_residual = 0.0;
  int inner_iterations = 0;
  int boundary_iterations = 0;
  /// Slope b of the affine re-emission map m -> a + b m.
  double boundary_contraction = 0.0;
  bool analytic = false;
};

/// Integrates omega_y dh/dy + (lambda + sigma + 2 pi i k.omega_x) h = sigma Q along y for
/// every direction, exactly for Q piecewise linear between grid nodes. `bottom` supplies
/// h(0, omega) for omega_y > 0 and `top` supplies h(Y, omega) for omega_y < 0; Q and the
/// result are (N+1) x M.
Eigen::MatrixXcd sweep_characteristics(const Quadrature& q, std::span<const double> ygrid,
                                       const ModeIndex& k, const Eigen::VectorXcd& bottom,
                                       const Eigen::VectorXcd& top, const Eigen::MatrixXcd& Q,
                                       double lambda, double sigma);

ModeSolution solve_mode(const TransportProblem& p, std::size_t mode);

/// Solves every mode, optionally on `threads` worker threads. The result does not
/// depend on the thread count.
std::vector<ModeSolution> solve_all_modes(const TransportProblem& p, int threads = 1);

/// |<<f>>_+(k,0) - (S(k) - kappa sigma (|S^d|/|B^d|) <omega_y f>(k,0))|, with the
/// rule's discrete measures.
double boundary_flux_residual(const TransportProblem& p, std::size_t mode, const ModeSolution& s);

/// <omega_y |fhat|^2>(k, y_j).
std::vector<double> entropy_flux_profile(const Quadrature& q, const ModeSolution& s);

/// Real-space field f(x_m, y_j, omega_i), stored x-major then y then omega.
struct RealField {
  std::vector<TorusPoint> points;
  std::size_t ny = 0;
  std::size_t directions = 0;
  std::vector<double> values;
  double max_imag = 0.0;

  double at(std::size_t x, std::size_t y, std::size_t i) const {
    return values[(x * ny + y) * directions + i];
  }
};

RealField assemble_field(const TransportProblem& p, std::span<const ModeSolution> solutions,
                         std::span<const TorusPoint> points);

struct RadiationPressure {
  /// P(x) = (1/c)(1/(d+1)) tr sum_i w_i omega_i (x) omega_i f(x,0,omega_i).
  std::vector<double> pressure;
  /// Frobenius norm of the deviation of the pressure tensor from P(x) I.
  std::vector<double> isotropy_defect;
};

RadiationPressure radiation_pressure(const TransportProblem& p, const RealField& field,
                                     const PhysicalConstants& constants);

}  // namespace kinfrac
