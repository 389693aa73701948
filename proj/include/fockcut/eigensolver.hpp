#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace fockcut {

// Symmetric operator given only by its action on vectors.
struct LinearOperator {
  Eigen::Index dimension = 0;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> apply;
};

struct EigenSolverOptions {
  std::uint64_t seed = 20240611;
  // Residual target relative to `scale`.
  double tolerance = 1e-10;
  double scale = 1.0;
  int max_basis = 0;  // 0: chosen from k
  int max_restarts = 200;
};

struct EigenResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  std::vector<double> residuals;
  bool converged = false;
  // Fewer than k eigenvalues lie below the cutoff.
  bool truncated_by_cutoff = false;
  int restarts = 0;
};

// k smallest eigenpairs below cutoff by a thick-restarted block Krylov
// (Lanczos-type) iteration with full reorthogonalization.
EigenResult lowest_eigenvalues(const LinearOperator& op, int k, double cutoff,
                               const EigenSolverOptions& options = {});

// All eigenpairs of a dense symmetric matrix, ascending.
EigenResult dense_eigenpairs(const Eigen::MatrixXd& matrix);

}  // namespace fockcut
