#pragma once

#include "fockcut/grid.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fockcut {

using ScalarField = std::function<double(const Point3&)>;
using PairField = std::function<double(const Point3&, const Point3&)>;

struct ModelFunctions {
  std::string label;
  double w0 = 0.0;
  ScalarField w1;
  ScalarField v0;
  ScalarField v1;
  ScalarField v2;
  PairField w2;
  // When set, w2(p, q) = dispersion(p) + dispersion(q); lets the Friedrichs
  // sums reuse tabulated node values.
  ScalarField dispersion;
  double dispersion_min = 0.0;
  double dispersion_max = 0.0;
  Point3 p0{0.0, 0.0, 0.0};
  // Index of the form factor that is orthogonal to 2pi-periodic functions.
  int orthogonal_index = 2;

  bool separable() const { return static_cast<bool>(dispersion); }
};

struct ExampleParams {
  double mu1 = 0.0;
  double mu2 = 0.0;
  Point3 c{1.0, 1.0, 1.0};
  Point3 d{1.0, 1.0, 1.0};
  double w0 = 1.0;
  double v0_amplitude = 0.0;
};

double example_dispersion(const Point3& p);
// Unit-strength form factors: sum c_i cos p_i and sum d_i cos(p_i / 2).
double unit_form_factor(const ExampleParams& params, int alpha, const Point3& p);

ModelFunctions example_family(const ExampleParams& params);

struct W2Extrema {
  double m = 0.0;
  double M = 0.0;
  Point3 argmin_p{};
  Point3 argmin_q{};
  Point3 argmax_p{};
  Point3 argmax_q{};
};

// Pair sweep over the nodes of sample_grid followed by local refinement.
W2Extrema min_max_w2(const ModelFunctions& model, const TorusGrid& sample_grid);

struct CouplingThresholds {
  int alpha = 1;
  // Couplings below lower keep the determinant positive at the threshold
  // everywhere; above upper it is negative everywhere.
  double lower = 0.0;
  double upper = 0.0;
  double lower_error = 0.0;
  double upper_error = 0.0;
  double singular_integral = 0.0;
  double regular_integral = 0.0;
};

// Richardson refinement over `levels` successive doublings of grid.
CouplingThresholds mu_thresholds(const ExampleParams& params, int alpha, const TorusGrid& grid,
                                 int levels = 3);

struct OrthogonalityReport {
  int index = 2;
  std::vector<double> values;
  double max_abs = 0.0;
  double max_relative = 0.0;
};

// 1, cos s_i, sin s_i, cos s_i cos s_j, cos 2 s_i.
std::vector<ScalarField> periodic_test_functions();

OrthogonalityReport check_orthogonality(const ModelFunctions& model, const TorusGrid& grid,
                                        const std::vector<ScalarField>& test_functions);

struct QuadraticBounds {
  double delta = 0.5;
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  Eigen::Matrix3d W1 = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d W2 = Eigen::Matrix3d::Zero();
  double hessian_min_eigenvalue = 0.0;
  std::size_t pairs_checked = 0;
  bool holds = false;
};

QuadraticBounds quadratic_bounds_check(const ModelFunctions& model, double delta = 0.5);

// Relative scale used by all root and residual tolerances: max(1, |m|, |M|).
double model_scale(double m, double M);

}  // namespace fockcut
