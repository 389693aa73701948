#pragma once

#include "fockcut/grid.hpp"
#include "fockcut/model.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fockcut {

// How the band edge of the determinant is handled.
//   refined: the sign at the threshold m(p) is taken from Richardson-refined
//            offset quadrature (an estimate of the continuum value).
//   grid:    everything, including the edge, uses the family's own grid, so
//            results match the discretized operators exactly.
enum class Threshold { refined, grid };

struct FriedrichsOptions {
  int richardson_levels = 3;
  // Threshold quadrature uses at least this many nodes per 2pi period.
  int min_refined_per_period = 16;
  std::size_t max_refined_nodes = std::size_t{1} << 22;
  double root_tolerance = 1e-11;
  double bisection_tolerance = 1e-8;
  double scan_window = 1e3;
};

struct DeltaEvaluation {
  int alpha = 1;
  Point3 p{};
  double z = 0.0;
  double value = 0.0;
  double error_estimate = 0.0;
};

struct BelowRoot {
  std::optional<double> z;
  double residual = 0.0;
  std::string note;
};

struct RootScan {
  Point3 p{};
  std::optional<double> below1;
  std::optional<double> below2;
  std::vector<double> above1;
  std::vector<double> above2;
  double max_residual = 0.0;
  std::size_t count() const {
    return (below1 ? 1 : 0) + (below2 ? 1 : 0) + above1.size() + above2.size();
  }
};

enum class RootSource { delta1_root, delta2_root };

struct HpEigenpair {
  Point3 p{};
  double z = 0.0;
  double f0 = 0.0;
  std::vector<double> f1;
  // Coefficient multiplying v2/(w2 - z) in the continuum component.
  double channel_coefficient = 0.0;
  RootSource source = RootSource::delta1_root;
  double residual = 0.0;
};

// Generalized Friedrichs fibers h(p) of a model, with all s-integrals taken
// on a fixed torus grid.
class FriedrichsFamily {
 public:
  FriedrichsFamily(const ModelFunctions& model, const TorusGrid& grid, FriedrichsOptions options = {});

  const ModelFunctions& model() const { return *model_; }
  const TorusGrid& grid() const { return *grid_; }
  const FriedrichsOptions& options() const { return options_; }
  double m() const { return m_; }
  double M() const { return M_; }
  double scale() const { return scale_; }

  // Continuum fiber extrema m(p), M(p).
  double fiber_min(const Point3& p) const;
  double fiber_max(const Point3& p) const;
  // Extrema of w2(p, s) over the grid nodes s.
  double grid_fiber_min(const Point3& p) const;
  double grid_fiber_max(const Point3& p) const;

  bool channel_vanishes(int alpha) const;

  // Delta_alpha(p; z). Threshold::grid needs z outside the grid band
  // [grid_fiber_min, grid_fiber_max]; its error estimate is the distance to
  // the refined value when that exists. Threshold::refined needs z outside
  // the open band (m(p), M(p)) and returns the Richardson extrapolation over
  // offset levels, so the edges themselves are allowed.
  DeltaEvaluation delta(int alpha, const Point3& p, double z,
                        Threshold mode = Threshold::grid) const;
  // d/dz of the grid determinant.
  double delta_derivative(int alpha, const Point3& p, double z) const;
  // Integral of v1 v2 / (w2(p, s) - z).
  double cross_term(const Point3& p, double z) const;

  BelowRoot eigenvalue_below(int alpha, const Point3& p, Threshold mode = Threshold::refined) const;
  // Roots above the band; with Threshold::refined only when the refined
  // determinant is positive at M(p).
  std::vector<double> roots_above(int alpha, const Point3& p, double& residual,
                                  Threshold mode = Threshold::refined) const;
  RootScan roots_full_scan(const Point3& p, Threshold mode = Threshold::refined) const;
  // Eigenvalues of h(p) outside the band; requires a vanishing cross term.
  std::vector<double> h_spectrum_discrete(const Point3& p) const;
  HpEigenpair reconstruct_h_eigenvector(const Point3& p, double z) const;

 private:
  // Quadrature table. Double-cover grids are folded onto one 2pi cell
  // (w2 is 2pi-periodic in s), summing the form-factor products of the eight
  // images; this only reorders the sums.
  struct Level {
    std::vector<Point3> nodes;
    double weight = 0.0;
    std::vector<double> v1sq, v2sq, v12, disp;
    double disp_lo = 0.0;
    double disp_hi = 0.0;
  };
  static Level make_level(const ModelFunctions& model, const TorusGrid& grid);
  const std::vector<double>& numerator(const Level& level, int alpha) const;
  double level_sum(const Level& level, const std::vector<double>& num, const Point3& p, double z,
                   int power) const;
  double level_delta(int alpha, const Level& level, const Point3& p, double z) const;
  double level_derivative(int alpha, const Level& level, const Point3& p, double z) const;
  double refined_delta(int alpha, const Point3& p, double z, double* error) const;
  double grid_delta_checked(int alpha, const Point3& p, double z) const;
  BelowRoot solve_root(int alpha, const Point3& p, double lo, double hi, bool decreasing) const;
  std::vector<double> scan_above(int alpha, const Point3& p, double top, double& residual) const;

  std::shared_ptr<const ModelFunctions> model_;
  std::shared_ptr<const TorusGrid> grid_;
  std::shared_ptr<const Level> level_;
  std::shared_ptr<const std::vector<Level>> refined_levels_;  // offset levels for thresholds
  // Separable models: refined integrals of num_alpha / (disp(s) - edge) at
  // the lower and upper dispersion edges.
  std::array<double, 2> edge_lo_{};
  std::array<double, 2> edge_hi_{};
  std::array<double, 2> edge_lo_err_{};
  std::array<double, 2> edge_hi_err_{};
  std::array<bool, 2> vanishes_{};
  FriedrichsOptions options_;
  double m_ = 0.0;
  double M_ = 0.0;
  double scale_ = 1.0;
};

enum class Regime { pos, mixed, neg, ambiguous };
std::string to_string(Regime regime);

struct RegimeClass {
  int alpha = 1;
  Regime regime = Regime::pos;
  double min_value = 0.0;
  double max_value = 0.0;
  double min_error = 0.0;
  double max_error = 0.0;
  double tolerance = 0.0;
  Point3 argmin{};
  Point3 argmax{};
  std::string note;
};

// Non-offset sweep over the base torus, always containing 0 and pi.
std::vector<Point3> p_sweep(int per_axis);

// Sign pattern of Delta_alpha(.; m) over the sweep with local refinement of
// the extremal points.
RegimeClass classify_regime(const FriedrichsFamily& family, int alpha, int sweep_per_axis = 9);

struct ZeroPoint {
  Point3 point{};
  double value = 0.0;
  double order = 0.0;
  double order_constant = 0.0;
  double fit_rms = 0.0;
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
  double hessian_min_eigenvalue = 0.0;
};

struct BranchSample {
  Point3 p{};
  std::optional<double> below;
  std::optional<double> above1;
  std::optional<double> above2;
  double residual = 0.0;
};

struct SweepOptions {
  int per_axis = 9;
  int multistart = 8;
  double merge_radius = 1e-3;
  double fit_radius = 0.5;
};

struct BranchData {
  int alpha = 1;
  RegimeClass regime;
  std::vector<BranchSample> samples;
  bool empty = true;
  double E_min = 0.0;
  double E_max = 0.0;
  // Largest below-band root found; exceeds m when the branch meets [m, M].
  double sup_root = 0.0;
  bool reaches_m = false;
  std::vector<ZeroPoint> min_zeros;
  std::vector<ZeroPoint> max_zeros;
  // Smallest Delta(.; E_min) on sweep nodes away from the zero set.
  double positivity_off_zeros = 0.0;
  std::optional<double> above_min;
  std::optional<double> above_max;
  std::string note;
};

BranchData two_particle_branch(const FriedrichsFamily& family, int alpha,
                               const SweepOptions& options = {});

// Vanishing order of |Delta(.; z)| around a point by log-log regression over
// radii in [radius/8, radius].
ZeroPoint fit_vanishing_order(const FriedrichsFamily& family, int alpha, const Point3& point,
                              double z, double radius);

void write_branch_csv(const BranchData& branch, std::ostream& out);

}  // namespace fockcut
