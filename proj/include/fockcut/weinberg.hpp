#pragma once

#include "fockcut/friedrichs.hpp"
#include "fockcut/grid.hpp"
#include "fockcut/model.hpp"
#include "fockcut/spectrum.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fockcut {

// Signs of Delta_1(.; z) and Delta_2(.; z); a vanishing channel reports +1.
struct SignPair {
  int first = 1;
  int second = 1;
};

// Sampled over the operator grid nodes and a non-offset sweep. Throws
// ForbiddenRegionError when a channel changes sign or vanishes.
SignPair xi(const FriedrichsFamily& family, double z, int sweep_per_axis = 9);

// W(z) on (C, nodes, symmetric pairs) in the orthonormal coordinates of
// DiscretizedOperator. Block (i, j) maps sector j to sector i.
class WeinbergOperator {
 public:
  static WeinbergOperator assemble(const FriedrichsFamily& family, double z,
                                   const OperatorLimits& limits = {});

  double z() const { return z_; }
  SignPair signs() const { return xi_; }
  const BlockLayout& layout() const { return layout_; }
  std::size_t dimension() const { return layout_.total(); }
  const Eigen::MatrixXd& matrix() const { return W_; }
  Eigen::MatrixXd block(int row, int col) const;

  // sqrt(xi_alpha Delta_alpha) at the nodes.
  const Eigen::VectorXd& root1() const { return R1_; }
  const Eigen::VectorXd& root2() const { return R2_; }

  // Candidate identifications of a discretized eigenvector with the fixed
  // point of W. Coordinates of f are those of DiscretizedOperator.
  struct Candidate {
    std::string name;
    double residual = 0.0;
  };
  struct FixedPoint {
    std::vector<Candidate> candidates;
    std::size_t best = 0;
    double best_residual() const { return candidates[best].residual; }
    const std::string& best_name() const { return candidates[best].name; }
  };
  FixedPoint fixed_point_residual(const Eigen::VectorXd& f) const;

 private:
  double z_ = 0.0;
  SignPair xi_;
  BlockLayout layout_;
  Eigen::MatrixXd W_;
  Eigen::VectorXd R1_, R2_;
  // Unscaled form factors at the nodes and the resolvent table 1/(w2 - z).
  Eigen::VectorXd v1_, v2_;
  Eigen::MatrixXd G_;
  std::vector<std::size_t> first_, second_;
  double weight_ = 0.0;
};

// Hilbert-Schmidt norms of the nine blocks (Frobenius norms in orthonormal
// coordinates).
std::array<std::array<double, 3>, 3> hs_norms(const WeinbergOperator& W);

// Largest singular values, non-increasing. Small matrices use a dense SVD,
// larger ones a Krylov solve on -A^T A.
std::vector<double> singular_values(const Eigen::MatrixXd& A, int count);

struct ContinuityTable {
  std::vector<double> z;
  // distance[i][j] = ||W(z_i) - W(z_j)||
  std::vector<std::vector<double>> distance;
};

ContinuityTable continuity_modulus(const FriedrichsFamily& family, const std::vector<double>& zs,
                                   const OperatorLimits& limits = {});

// ||W(z_k) - W(edge)|| along z_k = edge + direction * 2^-k.
struct EdgeApproach {
  double edge = 0.0;
  std::vector<double> z;
  std::vector<double> distance;
  bool monotone = false;
};

EdgeApproach edge_approach(const FriedrichsFamily& family, double edge, double direction,
                           int k_first = 2, int k_last = 8, const OperatorLimits& limits = {});

enum class MajorantWindow { below_min, above_max, near_threshold };
std::string to_string(MajorantWindow window);

struct MajorantCheck {
  MajorantWindow window = MajorantWindow::below_min;
  double z = 0.0;
  double delta = 0.5;
  double fitted_constant = 0.0;
  double worst_ratio = 0.0;  // validation maximum of |kernel| / majorant, over the fitted constant
  std::size_t samples = 0;
  bool holds = false;
};

// Checks that |W22 kernel(p, q, s, t; z)| is dominated by a fitted multiple
// of the singularity profile for the z-window. Singular points are the
// branch zeros (below_min, above_max) or the minimum of w2 (near_threshold).
MajorantCheck kernel_majorant_check(const FriedrichsFamily& family, const EssentialSpectrum& essential,
                                    double z, double delta = 0.5, std::uint64_t seed = 20240611);

}  // namespace fockcut
