#include "fockcut/grid.hpp"

#include "fockcut/errors.hpp"

#include <cmath>
#include <sstream>

namespace fockcut {

std::string to_string(GridMode mode) {
  return mode == GridMode::base ? "base" : "double";
}

GridMode grid_mode_from_string(const std::string& text) {
  if (text == "base") return GridMode::base;
  if (text == "double" || text == "double_cover") return GridMode::double_cover;
  throw InvalidArgument("unknown grid mode '" + text + "' (expected base or double)");
}

TorusGrid TorusGrid::build(int n_per_axis, GridMode mode, bool offset) {
  if (n_per_axis < 2) {
    throw InvalidArgument("grid needs at least 2 nodes per axis, got " + std::to_string(n_per_axis));
  }
  if (mode == GridMode::double_cover && n_per_axis % 2 != 0) {
    throw InvalidArgument("double-cover grid needs an even node count, got " +
                          std::to_string(n_per_axis));
  }
  TorusGrid g;
  g.n_ = n_per_axis;
  g.mode_ = mode;
  g.offset_ = offset;
  g.period_ = mode == GridMode::base ? kTwoPi : 2.0 * kTwoPi;
  g.spacing_ = g.period_ / n_per_axis;
  g.weight_ = std::pow(g.spacing_, 3);
  if (mode == GridMode::double_cover) g.weight_ /= 8.0;

  double theta = 1.0;
  if (offset) theta = (n_per_axis % 2 == 0) ? 0.5 : 0.25;
  g.axis_.resize(n_per_axis);
  for (int k = 0; k < n_per_axis; ++k) {
    g.axis_[k] = -0.5 * g.period_ + g.spacing_ * (k + theta);
  }
  g.nodes_.reserve(static_cast<std::size_t>(n_per_axis) * n_per_axis * n_per_axis);
  for (int i = 0; i < n_per_axis; ++i)
    for (int j = 0; j < n_per_axis; ++j)
      for (int k = 0; k < n_per_axis; ++k) g.nodes_.push_back({g.axis_[i], g.axis_[j], g.axis_[k]});
  return g;
}

TorusGrid TorusGrid::refined(int factor) const {
  return build(n_ * factor, mode_, offset_);
}

double integrate(const TorusGrid& grid, std::span<const double> samples) {
  if (samples.size() != grid.size()) {
    std::ostringstream os;
    os << "sample count " << samples.size() << " does not match grid size " << grid.size();
    throw InvalidArgument(os.str());
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      std::ostringstream os;
      const auto& p = grid.node(i);
      os << "non-finite sample at node " << i << " (" << p[0] << ", " << p[1] << ", " << p[2] << ")";
      throw NumericDomainError(os.str());
    }
    sum += samples[i];
  }
  return sum * grid.weight();
}

ShiftCheck shift_involution_check(const TorusGrid& grid) {
  ShiftCheck out;
  if (grid.mode() != GridMode::double_cover) {
    throw UnsupportedMode("the 2pi shift is the identity on the base torus");
  }
  const int n = grid.n_per_axis();
  const int half = n / 2;
  const double period = grid.period();
  std::vector<std::size_t> perm(grid.size());
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const std::size_t from = grid.index(i, j, k);
        const std::size_t to = grid.index((i + half) % n, (j + half) % n, (k + half) % n);
        perm[from] = to;
        for (int a = 0; a < 3; ++a) {
          double shifted = grid.node(from)[a] + 0.5 * period;
          if (shifted > 0.5 * period + 1e-12) shifted -= period;
          worst = std::max(worst, std::abs(shifted - grid.node(to)[a]));
        }
      }
  out.max_mismatch = worst;
  out.exact = worst <= 1e-12;
  if (out.exact) out.permutation = std::move(perm);
  return out;
}

Point3 wrap_base(const Point3& p) {
  Point3 out;
  for (int a = 0; a < 3; ++a) {
    double x = std::remainder(p[a], kTwoPi);
    if (x <= -kPi) x += kTwoPi;
    out[a] = x;
  }
  return out;
}

double torus_distance(const Point3& a, const Point3& b) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = std::remainder(a[k] - b[k], kTwoPi);
    s += d * d;
  }
  return std::sqrt(s);
}

double norm3(const Point3& p) { return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); }

SymPairIndex::SymPairIndex(std::size_t n_nodes) : n_(n_nodes) {
  const std::size_t total = n_nodes * (n_nodes + 1) / 2;
  first_.reserve(total);
  second_.reserve(total);
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t j = i; j < n_nodes; ++j) {
      first_.push_back(static_cast<std::uint32_t>(i));
      second_.push_back(static_cast<std::uint32_t>(j));
    }
}

Eigen::VectorXd sym_embed(const TorusGrid& grid, const SymPairIndex& pairs,
                          const Eigen::MatrixXd& table) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (table.rows() != n || table.cols() != n || pairs.nodes() != grid.size()) {
    throw InvalidArgument("symmetric table must be N x N with N the grid size");
  }
  const double scale = std::max(1.0, table.cwiseAbs().maxCoeff());
  double worst = 0.0;
  Eigen::Index wi = 0, wj = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = std::abs(table(i, j) - table(j, i));
      if (d > worst) {
        worst = d;
        wi = i;
        wj = j;
      }
    }
  if (worst > 1e-12 * scale) {
    std::ostringstream os;
    os << "table is not symmetric: |f(" << wi << "," << wj << ") - f(" << wj << "," << wi
       << ")| = " << worst;
    throw InvalidArgument(os.str());
  }
  Eigen::VectorXd x(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    x[q] = grid.weight() * pairs.multiplicity(q) * table(pairs.first(q), pairs.second(q));
  }
  return x;
}

Eigen::MatrixXd sym_project(const TorusGrid& grid, const SymPairIndex& pairs,
                            const Eigen::VectorXd& coords) {
  if (static_cast<std::size_t>(coords.size()) != pairs.size() || pairs.nodes() != grid.size()) {
    throw InvalidArgument("pair coordinate vector does not match the grid");
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd table(n, n);
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const double v = coords[q] / (grid.weight() * pairs.multiplicity(q));
    table(pairs.first(q), pairs.second(q)) = v;
    table(pairs.second(q), pairs.first(q)) = v;
  }
  return table;
}

RefinedValue richardson(std::span<const double> level_values, std::span<const int> exponents) {
  if (level_values.empty()) throw InvalidArgument("richardson needs at least one level");
  RefinedValue out;
  out.levels.assign(level_values.begin(), level_values.end());
  std::vector<double> row(level_values.begin(), level_values.end());
  double previous_best = row.back();
  for (std::size_t j = 1; j < level_values.size(); ++j) {
    if (j - 1 >= exponents.size()) break;
    const double factor = std::pow(2.0, exponents[j - 1]);
    previous_best = row.back();
    std::vector<double> next(row.size() - 1);
    for (std::size_t k = 0; k + 1 < row.size(); ++k) {
      next[k] = (factor * row[k + 1] - row[k]) / (factor - 1.0);
    }
    row = std::move(next);
  }
  out.value = row.back();
  out.error_estimate = level_values.size() > 1 ? std::abs(out.value - previous_best) : 0.0;
  return out;
}

}  // namespace fockcut
