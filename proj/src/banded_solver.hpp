#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace kinfrac::detail {

// Complex general band matrix in LAPACK band storage, factored once by zgbtrf
// and reused for any number of right-hand sides.
class BandedSystem {
 public:
  BandedSystem(int n, int lower, int upper);

  int size() const { return n_; }
  int lower() const { return kl_; }
  int upper() const { return ku_; }

  // Accumulates into A(row, col); |row - col| must lie inside the band.
  void add(int row, int col, std::complex<double> value);
  std::complex<double> at(int row, int col) const;

  // Returns A * x using the unfactored entries.
  Eigen::VectorXcd multiply(const Eigen::VectorXcd& x) const;

  void factor();
  // Solves A X = B column by column; requires factor().
  Eigen::MatrixXcd solve(const Eigen::MatrixXcd& rhs) const;

 private:
  int n_;
  int kl_;
  int ku_;
  int ldab_;
  std::vector<std::complex<double>> band_;
  std::vector<std::complex<double>> factored_;
  std::vector<int> pivots_;
  bool is_factored_ = false;
};

}  // namespace kinfrac::detail
