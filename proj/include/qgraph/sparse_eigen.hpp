#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>

namespace qg {

using SpMat = Eigen::SparseMatrix<double>;

struct EigenOptions {
  int basis = 0;           // Lanczos basis size; 0 -> max(2m + 16, 32)
  int max_restarts = 300;
  double tol = 1e-12;      // relative Ritz residual of the inverted operator
  std::uint64_t seed = 0x5eed;
  int dense_below = 400;   // dimension at or below which a dense solve is used
};

struct EigenSolution {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, M-orthonormal
  double shift = 0.0;
  int restarts = 0;
  double max_residual = 0.0;  // max ||A x - lambda M x|| / ||M^{-1/2} A M^{-1/2}||_inf
};

// m lowest eigenpairs of A x = lambda M x with M = diag(mass) > 0, A symmetric.
// Shift-invert thick-restart Lanczos; missing degenerate copies are recovered by
// deflation until an inertia count confirms none below the m-th value are absent.
EigenSolution eigen_lowest(const SpMat& A, const Eigen::VectorXd& mass, int m,
                           const EigenOptions& opt = {});
EigenSolution eigen_lowest(const SpMat& A, int m, const EigenOptions& opt = {});

// Number of eigenvalues of A x = lambda M x strictly below sigma (Sylvester inertia).
int count_below(const SpMat& A, const Eigen::VectorXd& mass, double sigma);

// Throws ValidationError unless A == A^T exactly.
void require_symmetric(const SpMat& A);

}  // namespace qg
