#include "fockcut/eigensolver.hpp"

#include "fockcut/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fockcut {

namespace {

// Orthogonalize W against V twice, then keep an orthonormal basis of what
// is left (rank-revealing QR).
Eigen::MatrixXd extend_basis(const Eigen::MatrixXd& V, Eigen::MatrixXd W, double drop) {
  for (int pass = 0; pass < 2; ++pass) {
    if (V.cols() > 0) W -= V * (V.transpose() * W);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
  const auto& R = qr.matrixR();
  Eigen::Index rank = 0;
  const Eigen::Index diag = std::min(W.rows(), W.cols());
  for (Eigen::Index i = 0; i < diag; ++i) {
    if (std::abs(R(i, i)) > drop) ++rank;
  }
  if (rank == 0) return Eigen::MatrixXd(W.rows(), 0);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(W.rows(), rank);
  for (int pass = 0; pass < 2; ++pass) {
    if (V.cols() > 0) Q -= V * (V.transpose() * Q);
    Q = Eigen::HouseholderQR<Eigen::MatrixXd>(Q).householderQ() *
        Eigen::MatrixXd::Identity(W.rows(), rank);
  }
  return Q;
}

Eigen::MatrixXd apply_block(const LinearOperator& op, const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Y(X.rows(), X.cols());
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    op.apply(X.col(j), y);
    Y.col(j) = y;
  }
  return Y;
}

}  // namespace

EigenResult lowest_eigenvalues(const LinearOperator& op, int k, double cutoff,
                               const EigenSolverOptions& options) {
  const Eigen::Index n = op.dimension;
  if (n <= 0 || k <= 0) throw InvalidArgument("eigen solve needs a positive dimension and count");
  k = static_cast<int>(std::min<Eigen::Index>(k, n));
  const Eigen::Index block = std::min<Eigen::Index>(n, k + 3);
  Eigen::Index max_basis = options.max_basis > 0 ? options.max_basis : std::max<Eigen::Index>(6 * block, 4 * k + 60);
  max_basis = std::min(max_basis, n);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd X0(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X0(i, j) = normal(rng);

  Eigen::MatrixXd V = extend_basis(Eigen::MatrixXd(n, 0), X0, 1e-12);
  Eigen::MatrixXd AV = apply_block(op, V);
  const double target = options.tolerance * options.scale;

  EigenResult result;
  Eigen::VectorXd theta;
  Eigen::MatrixXd Y;
  for (;;) {
    Eigen::MatrixXd T = V.transpose() * AV;
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    theta = es.eigenvalues();
    Y = es.eigenvectors();
    const Eigen::Index want = std::min<Eigen::Index>(k, V.cols());
    const Eigen::Index nres = std::min<Eigen::Index>(block, V.cols());
    Eigen::MatrixXd R = AV * Y.leftCols(nres) - V * Y.leftCols(nres) * theta.head(nres).asDiagonal();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < want; ++j) worst = std::max(worst, R.col(j).norm());
    if ((worst <= target && want == k) || V.cols() == n) {
      result.converged = true;
      break;
    }
    if (V.cols() + block > max_basis) {
      if (result.restarts >= options.max_restarts) break;
      const Eigen::Index keep = std::min<Eigen::Index>(V.cols(), k + block);
      V = (V * Y.leftCols(keep)).eval();
      AV = (AV * Y.leftCols(keep)).eval();
      ++result.restarts;
      R = AV.leftCols(nres) - V.leftCols(nres) * theta.head(nres).asDiagonal();
    }
    const double drop = 1e-14 * std::max(1.0, theta.cwiseAbs().maxCoeff());
    Eigen::MatrixXd Q = extend_basis(V, R, drop);
    if (Q.cols() == 0) {
      // Invariant subspace: Ritz pairs are exact.
      result.converged = true;
      Eigen::MatrixXd T2 = V.transpose() * AV;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(0.5 * (T2 + T2.transpose()));
      theta = es2.eigenvalues();
      Y = es2.eigenvectors();
      break;
    }
    Eigen::MatrixXd AQ = apply_block(op, Q);
    Eigen::MatrixXd V2(n, V.cols() + Q.cols());
    V2 << V, Q;
    Eigen::MatrixXd AV2(n, V2.cols());
    AV2 << AV, AQ;
    V = std::move(V2);
    AV = std::move(AV2);
  }

  const Eigen::Index want = std::min<Eigen::Index>(k, V.cols());
  Eigen::Index below = 0;
  while (below < want && theta(below) < cutoff) ++below;
  result.truncated_by_cutoff = below < k;
  result.values = theta.head(below);
  result.vectors = V * Y.leftCols(below);
  Eigen::VectorXd y(n);
  for (Eigen::Index j = 0; j < below; ++j) {
    op.apply(result.vectors.col(j), y);
    result.residuals.push_back((y - result.values(j) * result.vectors.col(j)).norm());
  }
  return result;
}

EigenResult dense_eigenpairs(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw InvalidArgument("dense eigen solve needs a square matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix);
  if (es.info() != Eigen::Success) throw NumericDomainError("dense eigen solve failed");
  EigenResult r;
  r.values = es.eigenvalues();
  r.vectors = es.eigenvectors();
  r.converged = true;
  const Eigen::MatrixXd res = matrix * r.vectors - r.vectors * r.values.asDiagonal();
  for (Eigen::Index j = 0; j < res.cols(); ++j) r.residuals.push_back(res.col(j).norm());
  return r;
}

}  // namespace fockcut
