#pragma once

#include "fockcut/eigensolver.hpp"
#include "fockcut/friedrichs.hpp"
#include "fockcut/grid.hpp"
#include "fockcut/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fockcut {

enum class OperatorKind { H, H1, H2, fiber };
std::string to_string(OperatorKind kind);

struct BlockLayout {
  std::size_t vacuum = 0;
  std::size_t one = 0;
  std::size_t two = 0;
  std::size_t total() const { return vacuum + one + two; }
};

struct OperatorLimits {
  std::size_t max_pairs = 30000;
  std::size_t max_dense_dimension = 3000;
};

// Discretization of the three-sector operator matrix in orthonormal
// coordinates: x0 = f0, x1(i) = sqrt(w) f1(s_i), x2(ij) = w c_ij f2(s_i, s_j)
// with c_ij = sqrt(2) off the diagonal. In these coordinates the
// annihilation block is B[v1] with B[v](i, {i,k}) = sqrt(w) v(k) / c_ik and
// the potential is V = 2 B[v2]^T B[v2].
class DiscretizedOperator {
 public:
  static DiscretizedOperator assemble(OperatorKind kind, const ModelFunctions& model,
                                      const TorusGrid& grid,
                                      std::optional<Point3> fiber_point = std::nullopt,
                                      const OperatorLimits& limits = {});

  OperatorKind kind() const { return kind_; }
  std::size_t dimension() const { return layout_.total(); }
  const BlockLayout& layout() const { return layout_; }
  const TorusGrid& grid() const { return *grid_; }
  const SymPairIndex& pairs() const { return *pairs_; }
  double scale() const { return scale_; }

  void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd dense() const;
  LinearOperator as_linear_operator() const;

  // Pieces of the full operator acting on sector coordinates.
  Eigen::VectorXd annihilate(const Eigen::VectorXd& two) const;  // H12 x2
  Eigen::VectorXd create(const Eigen::VectorXd& one) const;      // H12^* x1
  Eigen::VectorXd potential(const Eigen::VectorXd& two) const;   // V x2
  const Eigen::VectorXd& pair_energies() const { return w2_pairs_; }
  const Eigen::VectorXd& one_energies() const { return w1_nodes_; }
  // sqrt(w) times the form factors at the nodes.
  const Eigen::VectorXd& scaled_v0() const { return v0_; }
  const Eigen::VectorXd& scaled_v1() const { return v1_; }
  const Eigen::VectorXd& scaled_v2() const { return v2_; }

 private:
  Eigen::VectorXd b_apply(const Eigen::VectorXd& v, const Eigen::VectorXd& two) const;
  Eigen::VectorXd bt_apply(const Eigen::VectorXd& v, const Eigen::VectorXd& one) const;

  OperatorKind kind_ = OperatorKind::H;
  BlockLayout layout_;
  std::shared_ptr<const TorusGrid> grid_;
  std::shared_ptr<const SymPairIndex> pairs_;
  double w0_ = 0.0;
  Eigen::VectorXd v0_, v1_, v2_, w1_nodes_, w2_pairs_;
  // Fiber operator data.
  double w1_fiber_ = 0.0;
  Eigen::VectorXd w2_fiber_;
  double scale_ = 1.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct EssentialSpectrum {
  std::vector<Interval> intervals;
  double tau_ess = 0.0;
  double m = 0.0;
  double M = 0.0;
  std::array<BranchData, 2> branches;
  // Label per channel: (i) [m, M]; (ii) [E_min, M];
  // (iii) [E_min, E_max] with [m, M]; "undetermined" when ambiguous.
  std::array<std::string, 2> channel_case;
  // True when every channel's below-M piece has the shape its label predicts.
  bool structure_matches = false;
};

EssentialSpectrum essential_spectrum(const FriedrichsFamily& family, const SweepOptions& sweep = {});
double tau_ess(const EssentialSpectrum& essential);

struct SigmaSet {
  std::vector<Interval> intervals;
  std::string case_label;  // "(i)".."(vi)", "(v.a)"/"(v.b)", or "UNCLASSIFIED"
  bool classified = false;
  double E_min = 0.0;
  double E_max = 0.0;
};

SigmaSet sigma_region(const EssentialSpectrum& essential);
// Closure of [lo, hi] minus the union of the closed intervals.
std::vector<Interval> closure_minus(const Interval& base, const std::vector<Interval>& removed);

struct DiscreteOptions {
  double eta_relative = 1e-6;
  double stability_relative = 1e-3;
  OperatorLimits limits;
  EigenSolverOptions solver;
  int iterative_count = 64;
};

struct DiscreteLevel {
  int n = 0;
  std::size_t dimension = 0;
  std::string solver;
  std::vector<double> values;
  std::vector<double> residuals;
  // Position moves by <= stability_relative * scale to the next level.
  std::vector<bool> stable;
  std::size_t excluded_below_m = 0;
  std::array<std::optional<Interval>, 2> bands;
  double min_edge_distance = 0.0;
  bool truncated = false;
};

struct DiscreteSpectrumReport {
  std::vector<DiscreteLevel> levels;
  std::vector<double> sigma_edges;
  bool in_hypothesis = false;
  std::string hypothesis_note;
  bool count_stable = false;
  bool edges_non_accumulating = false;
  double eta = 0.0;
};

// Grid-consistent branch bands: roots of the grid determinants at the grid
// nodes, restricted to (-inf, m - eta).
std::array<std::optional<Interval>, 2> node_root_bands(const FriedrichsFamily& family, double eta);

DiscreteSpectrumReport discrete_below_m(const ModelFunctions& model,
                                        const EssentialSpectrum& essential,
                                        const std::vector<TorusGrid>& grids,
                                        const DiscreteOptions& options = {});

struct EmbeddingCheck {
  double z = 0.0;
  // Outside the grid-consistent band of its channel.
  bool discrete = false;
  double residual = 0.0;
  double annihilation_norm = 0.0;
  double potential_norm = 0.0;
  double reconstruction_mismatch = 0.0;
  bool passed = false;
};

struct EmbeddingReport {
  std::string mode;
  double eta = 0.0;
  std::vector<EmbeddingCheck> two_channel;
  std::vector<EmbeddingCheck> one_channel;
  bool all_passed = true;
};

EmbeddingReport verify_block_embedding(const ModelFunctions& model, const TorusGrid& grid,
                               const DiscreteOptions& options = {});

}  // namespace fockcut
