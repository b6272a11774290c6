#include "banded_solver.hpp"

#include <algorithm>
#include <string>

#include "kinfrac/errors.hpp"

extern "C" {
void zgbtrf_(const int* m, const int* n, const int* kl, const int* ku, std::complex<double>* ab,
             const int* ldab, int* ipiv, int* info);
void zgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const std::complex<double>* ab, const int* ldab, const int* ipiv,
             std::complex<double>* b, const int* ldb, int* info);
}

namespace kinfrac::detail {

BandedSystem::BandedSystem(int n, int lower, int upper)
    : n_(n), kl_(lower), ku_(upper), ldab_(2 * lower + upper + 1) {
  band_.assign(static_cast<std::size_t>(ldab_) * static_cast<std::size_t>(n_), {0.0, 0.0});
}

// Column-major band storage: A(i, j) lives at ab(kl + ku + i - j, j).
void BandedSystem::add(int row, int col, std::complex<double> value) {
  const int offset = kl_ + ku_ + row - col;
  if (row < 0 || col < 0 || row >= n_ || col >= n_ || row - col > kl_ || col - row > ku_)
    throw SolverError("BandedSystem: entry (" + std::to_string(row) + ", " + std::to_string(col) +
                      ") outside the band");
  band_[static_cast<std::size_t>(col) * static_cast<std::size_t>(ldab_) +
        static_cast<std::size_t>(offset)] += value;
  is_factored_ = false;
}

std::complex<double> BandedSystem::at(int row, int col) const {
  if (row - col > kl_ || col - row > ku_) return {0.0, 0.0};
  return band_[static_cast<std::size_t>(col) * static_cast<std::size_t>(ldab_) +
               static_cast<std::size_t>(kl_ + ku_ + row - col)];
}

Eigen::VectorXcd BandedSystem::multiply(const Eigen::VectorXcd& x) const {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(n_);
  for (int col = 0; col < n_; ++col) {
    const int lo = std::max(0, col - ku_);
    const int hi = std::min(n_ - 1, col + kl_);
    for (int row = lo; row <= hi; ++row) y(row) += at(row, col) * x(col);
  }
  return y;
}

void BandedSystem::factor() {
  factored_ = band_;
  pivots_.assign(static_cast<std::size_t>(n_), 0);
  int info = 0;
  zgbtrf_(&n_, &n_, &kl_, &ku_, factored_.data(), &ldab_, pivots_.data(), &info);
  if (info != 0)
    throw SolverError("BandedSystem: zgbtrf failed (info = " + std::to_string(info) + ")");
  is_factored_ = true;
}

Eigen::MatrixXcd BandedSystem::solve(const Eigen::MatrixXcd& rhs) const {
  if (!is_factored_) throw SolverError("BandedSystem: solve before factor");
  if (rhs.rows() != n_) throw InvalidArgument("BandedSystem: right-hand side has wrong length");
  Eigen::MatrixXcd x = rhs;
  const int nrhs = static_cast<int>(x.cols());
  const char trans = 'N';
  int info = 0;
  zgbtrs_(&trans, &n_, &kl_, &ku_, &nrhs, factored_.data(), &ldab_, pivots_.data(), x.data(),
          &n_, &info);
  if (info != 0)
    throw SolverError("BandedSystem: zgbtrs failed (info = " + std::to_string(info) + ")");
  return x;
}

}  // namespace kinfrac::detail
