#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fockcut {

using Point3 = std::array<double, 3>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// base: the torus (-pi, pi]^3. double_cover: (-2pi, 2pi]^3 with the measure
// rescaled by 1/8 so that integrals of 2pi-periodic functions agree.
enum class GridMode { base, double_cover };

std::string to_string(GridMode mode);
GridMode grid_mode_from_string(const std::string& text);

// Uniform tensor grid on the torus with equal trapezoidal weights.
class TorusGrid {
 public:
  // Odd n is accepted for the base torus only; offset then shifts nodes by a
  // quarter cell so that neither 0 nor pi is a node.
  static TorusGrid build(int n_per_axis, GridMode mode, bool offset);

  int n_per_axis() const { return n_; }
  GridMode mode() const { return mode_; }
  bool offset() const { return offset_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Point3>& nodes() const { return nodes_; }
  const Point3& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<double>& axis() const { return axis_; }
  double weight() const { return weight_; }
  double spacing() const { return spacing_; }
  double period() const { return period_; }
  double total_measure() const { return weight_ * static_cast<double>(size()); }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }
  // Same mode and offset rule with n multiplied by factor.
  TorusGrid refined(int factor) const;

 private:
  int n_ = 0;
  GridMode mode_ = GridMode::base;
  bool offset_ = false;
  double period_ = 0.0;
  double spacing_ = 0.0;
  double weight_ = 0.0;
  std::vector<double> axis_;
  std::vector<Point3> nodes_;
};

// Weighted sum of samples taken at the grid nodes.
double integrate(const TorusGrid& grid, std::span<const double> samples);

template <class F>
double integrate_function(const TorusGrid& grid, F&& f) {
  std::vector<double> samples(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) samples[i] = f(grid.node(i));
  return integrate(grid, samples);
}

struct ShiftCheck {
  bool exact = false;
  double max_mismatch = 0.0;
  // node index -> index of node + (2pi, 2pi, 2pi); empty unless exact.
  std::vector<std::size_t> permutation;
};

// Checks that s -> s + 2pi(1,1,1) permutes the nodes of a double-cover grid.
ShiftCheck shift_involution_check(const TorusGrid& grid);

// Wraps each coordinate into (-pi, pi].
Point3 wrap_base(const Point3& p);
// Distance on the 2pi-periodic torus.
double torus_distance(const Point3& a, const Point3& b);
double norm3(const Point3& p);

// Unordered node pairs {i <= j} used to store symmetric two-particle
// functions in orthonormal coordinates.
class SymPairIndex {
 public:
  explicit SymPairIndex(std::size_t n_nodes);
  std::size_t nodes() const { return n_; }
  std::size_t size() const { return first_.size(); }
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * n_ - (i * (i + 1)) / 2 + j;
  }
  std::uint32_t first(std::size_t pair) const { return first_[pair]; }
  std::uint32_t second(std::size_t pair) const { return second_[pair]; }
  // 1 on the diagonal, sqrt(2) off it.
  double multiplicity(std::size_t pair) const {
    return first_[pair] == second_[pair] ? 1.0 : kSqrt2;
  }

  static constexpr double kSqrt2 = 1.41421356237309504880;

 private:
  std::size_t n_;
  std::vector<std::uint32_t> first_;
  std::vector<std::uint32_t> second_;
};

// Symmetric node table f(i, j) -> coordinates x with |x|^2 equal to the
// weighted double sum of f^2. Non-symmetric input is rejected.
Eigen::VectorXd sym_embed(const TorusGrid& grid, const SymPairIndex& pairs,
                          const Eigen::MatrixXd& table);
Eigen::MatrixXd sym_project(const TorusGrid& grid, const SymPairIndex& pairs,
                            const Eigen::VectorXd& coords);

struct RefinedValue {
  double value = 0.0;
  double error_estimate = 0.0;
  std::vector<double> levels;
};

// Richardson tableau for values on grids n, 2n, 4n, ... whose error expands
// in powers h^exponents[0], h^exponents[1], ...
RefinedValue richardson(std::span<const double> level_values, std::span<const int> exponents);

// Point singularities of type 1/|s|^2 give odd powers of h.
inline constexpr std::array<int, 3> kPointSingularityExponents{1, 3, 5};

template <class F>
RefinedValue integrate_refined(const TorusGrid& coarsest, int levels, F&& f) {
  std::vector<double> values;
  for (int l = 0; l < levels; ++l) {
    values.push_back(integrate_function(coarsest.refined(1 << l), f));
  }
  return richardson(values, kPointSingularityExponents);
}

}  // namespace fockcut
