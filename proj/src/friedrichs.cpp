#include "fockcut/friedrichs.hpp"

#include "fockcut/detail/pattern_search.hpp"
#include "fockcut/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace fockcut {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

std::string point_text(const Point3& p) {
  std::ostringstream os;
  os << std::setprecision(6) << "(" << p[0] << ", " << p[1] << ", " << p[2] << ")";
  return os.str();
}

Point3 as_point(const std::vector<double>& x) { return {x[0], x[1], x[2]}; }

}  // namespace

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::pos: return "POS";
    case Regime::mixed: return "MIXED";
    case Regime::neg: return "NEG";
    case Regime::ambiguous: return "AMBIGUOUS";
  }
  return "?";
}

FriedrichsFamily::Level FriedrichsFamily::make_level(const ModelFunctions& model,
                                                     const TorusGrid& grid) {
  Level level;
  const bool fold = grid.mode() == GridMode::double_cover;
  const int n = grid.n_per_axis();
  const int reps = fold ? n / 2 : n;
  const std::size_t count = static_cast<std::size_t>(reps) * reps * reps;
  level.nodes.reserve(count);
  level.v1sq.reserve(count);
  level.v2sq.reserve(count);
  level.v12.reserve(count);
  level.weight = grid.weight();
  const int images = fold ? 2 : 1;
  for (int i = 0; i < reps; ++i)
    for (int j = 0; j < reps; ++j)
      for (int k = 0; k < reps; ++k) {
        double a11 = 0.0, a22 = 0.0, a12 = 0.0;
        for (int a = 0; a < images; ++a)
          for (int b = 0; b < images; ++b)
            for (int c = 0; c < images; ++c) {
              const auto& s = grid.node(grid.index(i + a * reps, j + b * reps, k + c * reps));
              const double x1 = model.v1(s);
              const double x2 = model.v2(s);
              a11 += x1 * x1;
              a22 += x2 * x2;
              a12 += x1 * x2;
            }
        const auto& rep = grid.node(grid.index(i, j, k));
        level.nodes.push_back(rep);
        level.v1sq.push_back(a11);
        level.v2sq.push_back(a22);
        level.v12.push_back(a12);
        if (model.separable()) level.disp.push_back(model.dispersion(rep));
      }
  if (!level.disp.empty()) {
    level.disp_lo = *std::min_element(level.disp.begin(), level.disp.end());
    level.disp_hi = *std::max_element(level.disp.begin(), level.disp.end());
  }
  return level;
}

FriedrichsFamily::FriedrichsFamily(const ModelFunctions& model, const TorusGrid& grid,
                                   FriedrichsOptions options)
    : model_(std::make_shared<const ModelFunctions>(model)),
      grid_(std::make_shared<const TorusGrid>(grid)),
      options_(options) {
  if (!model.w1 || !model.v1 || !model.v2 || !model.w2) {
    throw InvalidArgument("model functions are incomplete");
  }
  level_ = std::make_shared<const Level>(make_level(model, grid));

  if (model.separable()) {
    m_ = 2.0 * model.dispersion_min;
    M_ = 2.0 * model.dispersion_max;
  } else {
    const auto ext = min_max_w2(model, TorusGrid::build(10, GridMode::base, false));
    m_ = ext.m;
    M_ = ext.M;
  }
  scale_ = model_scale(m_, M_);

  for (int a = 0; a < 2; ++a) {
    const auto& num = a == 0 ? level_->v1sq : level_->v2sq;
    vanishes_[a] = std::all_of(num.begin(), num.end(), [](double x) { return x == 0.0; });
  }

  const int per_period = grid.mode() == GridMode::base ? grid.n_per_axis() : grid.n_per_axis() / 2;
  const int rn = std::max(per_period + per_period % 2, options_.min_refined_per_period);
  auto levels = std::make_shared<std::vector<Level>>();
  for (int l = 0; l < std::max(1, options_.richardson_levels); ++l) {
    const int np = rn << l;
    const std::size_t nodes = static_cast<std::size_t>(np) * np * np;
    if (l > 0 && nodes > options_.max_refined_nodes) break;
    const GridMode mode = grid.mode();
    const int n_axis = mode == GridMode::double_cover ? 2 * np : np;
    levels->push_back(make_level(model, TorusGrid::build(n_axis, mode, true)));
  }
  refined_levels_ = levels;

  if (model.separable()) {
    for (int a = 0; a < 2; ++a) {
      for (int edge = 0; edge < 2; ++edge) {
        const double t = edge == 0 ? model.dispersion_min : model.dispersion_max;
        std::vector<double> vals;
        for (const auto& L : *refined_levels_) {
          const auto& num = a == 0 ? L.v1sq : L.v2sq;
          double sum = 0.0;
          for (std::size_t i = 0; i < L.nodes.size(); ++i) {
            if (num[i] == 0.0) continue;
            const double d = L.disp[i] - t;
            if (d == 0.0) throw SingularNodeError("refined threshold level contains a singular node");
            sum += num[i] / d;
          }
          vals.push_back(sum * L.weight);
        }
        const auto r = richardson(vals, kPointSingularityExponents);
        (edge == 0 ? edge_lo_ : edge_hi_)[a] = r.value;
        (edge == 0 ? edge_lo_err_ : edge_hi_err_)[a] = r.error_estimate;
      }
    }
  }
}

bool FriedrichsFamily::channel_vanishes(int alpha) const { return vanishes_[alpha - 1]; }

double FriedrichsFamily::fiber_min(const Point3& p) const {
  if (model_->separable()) return model_->dispersion(p) + model_->dispersion_min;
  const auto& L = *level_;
  std::size_t best = 0;
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < L.nodes.size(); ++i) {
    const double v = model_->w2(p, L.nodes[i]);
    if (v < lo) {
      lo = v;
      best = i;
    }
  }
  const auto& s = L.nodes[best];
  auto r = detail::pattern_search(
      [&](const std::vector<double>& x) { return model_->w2(p, as_point(x)); },
      {s[0], s[1], s[2]}, 0.5 * grid().spacing(), 1e-10);
  return std::min(lo, r.value);
}

double FriedrichsFamily::fiber_max(const Point3& p) const {
  if (model_->separable()) return model_->dispersion(p) + model_->dispersion_max;
  const auto& L = *level_;
  std::size_t best = 0;
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < L.nodes.size(); ++i) {
    const double v = model_->w2(p, L.nodes[i]);
    if (v > hi) {
      hi = v;
      best = i;
    }
  }
  const auto& s = L.nodes[best];
  auto r = detail::pattern_search(
      [&](const std::vector<double>& x) { return -model_->w2(p, as_point(x)); },
      {s[0], s[1], s[2]}, 0.5 * grid().spacing(), 1e-10);
  return std::max(hi, -r.value);
}

double FriedrichsFamily::grid_fiber_min(const Point3& p) const {
  const auto& L = *level_;
  double lo = std::numeric_limits<double>::infinity();
  if (model_->separable()) {
    lo = L.disp_lo + model_->dispersion(p);
  } else {
    for (const auto& s : L.nodes) lo = std::min(lo, model_->w2(p, s));
  }
  return lo;
}

double FriedrichsFamily::grid_fiber_max(const Point3& p) const {
  const auto& L = *level_;
  double hi = -std::numeric_limits<double>::infinity();
  if (model_->separable()) {
    hi = L.disp_hi + model_->dispersion(p);
  } else {
    for (const auto& s : L.nodes) hi = std::max(hi, model_->w2(p, s));
  }
  return hi;
}

const std::vector<double>& FriedrichsFamily::numerator(const Level& level, int alpha) const {
  if (alpha == 1) return level.v1sq;
  if (alpha == 2) return level.v2sq;
  return level.v12;
}

double FriedrichsFamily::level_sum(const Level& L, const std::vector<double>& num, const Point3& p,
                                   double z, int power) const {
  double sum = 0.0;
  const std::size_t n = L.nodes.size();
  if (model_->separable()) {
    const double shift = model_->dispersion(p) - z;
    if (power == 1) {
      for (std::size_t i = 0; i < n; ++i) sum += num[i] / (L.disp[i] + shift);
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double d = L.disp[i] + shift;
        sum += num[i] / (d * d);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double d = model_->w2(p, L.nodes[i]) - z;
      sum += power == 1 ? num[i] / d : num[i] / (d * d);
    }
  }
  return sum * L.weight;
}

double FriedrichsFamily::level_delta(int alpha, const Level& L, const Point3& p, double z) const {
  if (alpha == 1) return model_->w1(p) - z - 0.5 * level_sum(L, L.v1sq, p, z, 1);
  return 1.0 - level_sum(L, L.v2sq, p, z, 1);
}

double FriedrichsFamily::level_derivative(int alpha, const Level& L, const Point3& p,
                                          double z) const {
  if (alpha == 1) return -1.0 - 0.5 * level_sum(L, L.v1sq, p, z, 2);
  return -level_sum(L, L.v2sq, p, z, 2);
}

double FriedrichsFamily::refined_delta(int alpha, const Point3& p, double z, double* error) const {
  const double lo = fiber_min(p);
  const double hi = fiber_max(p);
  if (z > lo && z < hi) {
    std::ostringstream os;
    os << "z = " << z << " lies inside the band [" << lo << ", " << hi << "] at p = "
       << point_text(p);
    throw SpectralBandError(os.str());
  }
  if (model_->separable() && (z == lo || z == hi)) {
    const int a = alpha - 1;
    const double J = z == lo ? edge_lo_[a] : edge_hi_[a];
    const double err = z == lo ? edge_lo_err_[a] : edge_hi_err_[a];
    if (error) *error = alpha == 1 ? 0.5 * err : err;
    return alpha == 1 ? model_->w1(p) - z - 0.5 * J : 1.0 - J;
  }
  std::vector<double> vals;
  for (const auto& L : *refined_levels_) {
    if (z == lo || z == hi) {
      // Offset levels keep the edge node out; guard anyway.
      for (const auto& s : L.nodes) {
        if (model_->w2(p, s) == z) throw SingularNodeError("refined level hits the singular node");
      }
    }
    vals.push_back(level_delta(alpha, L, p, z));
  }
  const auto r = richardson(vals, kPointSingularityExponents);
  if (error) *error = r.error_estimate;
  return r.value;
}

double FriedrichsFamily::grid_delta_checked(int alpha, const Point3& p, double z) const {
  if (alpha != 1 && alpha != 2) throw InvalidArgument("channel index must be 1 or 2");
  const double lo = grid_fiber_min(p);
  const double hi = grid_fiber_max(p);
  if (z >= lo && z <= hi) {
    std::ostringstream os;
    os << "z = " << z << " lies inside the grid band [" << lo << ", " << hi << "] at p = "
       << point_text(p);
    throw SpectralBandError(os.str());
  }
  return level_delta(alpha, *level_, p, z);
}

DeltaEvaluation FriedrichsFamily::delta(int alpha, const Point3& p, double z, Threshold mode) const {
  if (alpha != 1 && alpha != 2) throw InvalidArgument("channel index must be 1 or 2");
  DeltaEvaluation e;
  e.alpha = alpha;
  e.p = p;
  e.z = z;
  if (mode == Threshold::refined) {
    e.value = refined_delta(alpha, p, z, &e.error_estimate);
  } else {
    e.value = grid_delta_checked(alpha, p, z);
    const double lo = fiber_min(p);
    const double hi = fiber_max(p);
    if (z <= lo || z >= hi) {
      const double ref = refined_delta(alpha, p, z, nullptr);
      e.error_estimate = std::abs(ref - e.value);
    }
  }
  if (!std::isfinite(e.value)) {
    throw NumericDomainError("determinant is not finite at p = " + point_text(p));
  }
  return e;
}

double FriedrichsFamily::delta_derivative(int alpha, const Point3& p, double z) const {
  const double lo = grid_fiber_min(p);
  const double hi = grid_fiber_max(p);
  if (z >= lo && z <= hi) throw SpectralBandError("derivative requested inside the grid band");
  return level_derivative(alpha, *level_, p, z);
}

double FriedrichsFamily::cross_term(const Point3& p, double z) const {
  const double lo = grid_fiber_min(p);
  const double hi = grid_fiber_max(p);
  if (z >= lo && z <= hi) throw SpectralBandError("cross term requested inside the grid band");
  return level_sum(*level_, level_->v12, p, z, 1);
}

BelowRoot FriedrichsFamily::solve_root(int alpha, const Point3& p, double lo, double hi,
                                       bool decreasing) const {
  // Bracket [lo, hi] with a sign change; f is oriented so that f(lo) > 0 > f(hi).
  const double sgn = decreasing ? 1.0 : -1.0;
  auto f = [&](double z) { return sgn * level_delta(alpha, *level_, p, z); };
  auto df = [&](double z) { return sgn * level_derivative(alpha, *level_, p, z); };
  const double ztol = options_.bisection_tolerance * scale_;
  while (hi - lo > ztol) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) lo = mid; else hi = mid;
  }
  double z = 0.5 * (lo + hi);
  double fz = f(z);
  for (int it = 0; it < 5 && std::abs(fz) > options_.root_tolerance * scale_; ++it) {
    const double d = df(z);
    double next = d != 0.0 ? z - fz / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double fn = f(next);
    if (fn > 0.0) lo = next; else hi = next;
    z = next;
    fz = fn;
  }
  BelowRoot r;
  r.z = z;
  r.residual = std::abs(fz);
  if (r.residual > options_.root_tolerance * scale_) {
    std::ostringstream os;
    os << "root residual " << r.residual << " above tolerance";
    r.note = os.str();
  }
  return r;
}

BelowRoot FriedrichsFamily::eigenvalue_below(int alpha, const Point3& p, Threshold mode) const {
  if (alpha != 1 && alpha != 2) throw InvalidArgument("channel index must be 1 or 2");
  BelowRoot out;
  if (alpha == 2 && channel_vanishes(2)) {
    out.note = "form factor vanishes; determinant is identically 1";
    return out;
  }
  const double top = grid_fiber_min(p);
  if (mode == Threshold::refined) {
    const double thr = refined_delta(alpha, p, fiber_min(p), nullptr);
    if (thr >= 0.0) {
      out.note = "determinant nonnegative at the threshold";
      return out;
    }
  }
  auto f = [&](double z) { return level_delta(alpha, *level_, p, z); };
  const double tiny = 1e-12 * scale_;
  double hi = top - tiny;
  if (f(hi) >= 0.0) {
    out.note = mode == Threshold::refined
                   ? "grid quadrature does not resolve the root below the threshold"
                   : "determinant nonnegative below the grid band";
    return out;
  }
  double step = 1e-3 * scale_;
  double lo = top - step;
  while (f(lo) < 0.0) {
    hi = lo;
    step *= 2.0;
    if (step > options_.scan_window * scale_) {
      out.note = "no sign change within the search window";
      return out;
    }
    lo = top - step;
  }
  return solve_root(alpha, p, lo, hi, true);
}

std::vector<double> FriedrichsFamily::scan_above(int alpha, const Point3& p, double top,
                                                 double& residual) const {
  std::vector<double> roots;
  auto f = [&](double z) { return level_delta(alpha, *level_, p, z); };
  double z_prev = top + 1e-10 * scale_;
  double f_prev = f(z_prev);
  for (int k = 1; k <= 52; ++k) {
    const double z = top + scale_ * std::pow(10.0, (k - 40) / 4.0);
    const double fz = f(z);
    if ((f_prev > 0.0) != (fz > 0.0)) {
      const auto r = solve_root(alpha, p, z_prev, z, f_prev > 0.0);
      roots.push_back(*r.z);
      residual = std::max(residual, r.residual);
    }
    z_prev = z;
    f_prev = fz;
  }
  return roots;
}

std::vector<double> FriedrichsFamily::roots_above(int alpha, const Point3& p, double& residual,
                                                  Threshold mode) const {
  if (alpha != 1 && alpha != 2) throw InvalidArgument("channel index must be 1 or 2");
  if (alpha == 2 && channel_vanishes(2)) return {};
  if (mode == Threshold::refined && refined_delta(alpha, p, fiber_max(p), nullptr) <= 0.0) return {};
  return scan_above(alpha, p, grid_fiber_max(p), residual);
}

RootScan FriedrichsFamily::roots_full_scan(const Point3& p, Threshold mode) const {
  RootScan scan;
  scan.p = p;
  for (int alpha = 1; alpha <= 2; ++alpha) {
    const auto below = eigenvalue_below(alpha, p, mode);
    if (below.z) {
      (alpha == 1 ? scan.below1 : scan.below2) = below.z;
      scan.max_residual = std::max(scan.max_residual, below.residual);
    }
    (alpha == 1 ? scan.above1 : scan.above2) = roots_above(alpha, p, scan.max_residual, mode);
  }
  return scan;
}

std::vector<double> FriedrichsFamily::h_spectrum_discrete(const Point3& p) const {
  const double tol = 1e-12 * scale_;
  auto check_cross = [&](double z) {
    const double c = cross_term(p, z);
    if (std::abs(c) > tol) {
      std::ostringstream os;
      os << "cross term " << c << " at z = " << z
         << " does not vanish; the channels only decouple on the double-cover torus";
      throw DecouplingViolatedError(os.str());
    }
    return c;
  };
  check_cross(grid_fiber_min(p) - 1.0);
  const auto scan = roots_full_scan(p);
  std::vector<double> roots;
  if (scan.below1) roots.push_back(*scan.below1);
  if (scan.below2) roots.push_back(*scan.below2);
  roots.insert(roots.end(), scan.above1.begin(), scan.above1.end());
  roots.insert(roots.end(), scan.above2.begin(), scan.above2.end());
  for (double z : roots) {
    const double c = check_cross(z);
    const double d1 = level_delta(1, *level_, p, z);
    const double d2 = level_delta(2, *level_, p, z);
    const double det = d1 * d2 - 0.5 * c * c;
    const double slope = std::max(std::abs(level_derivative(1, *level_, p, z) * d2),
                                  std::abs(level_derivative(2, *level_, p, z) * d1));
    if (std::abs(det) > 1e-9 * std::max(1.0, slope)) {
      std::ostringstream os;
      os << "coupled determinant " << det << " does not vanish at root z = " << z;
      throw InvariantViolation(os.str());
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

HpEigenpair FriedrichsFamily::reconstruct_h_eigenvector(const Point3& p, double z) const {
  const double d1 = grid_delta_checked(1, p, z);
  const double d2 = level_delta(2, *level_, p, z);
  const double c = cross_term(p, z);
  Eigen::Matrix2d A;
  A << d1, kInvSqrt2 * c, kInvSqrt2 * c, d2;
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(A, Eigen::ComputeFullV);
  const double smin = svd.singularValues()(1);
  const double smax = svd.singularValues()(0);
  if (smin > 1e-8 * scale_ * std::max(1.0, smax)) {
    std::ostringstream os;
    os << "z = " << z << " is not an eigenvalue of h(p) at p = " << point_text(p)
       << " (smallest singular value " << smin << ")";
    throw NotAnEigenvalueError(os.str());
  }
  const Eigen::Vector2d null = svd.matrixV().col(1);
  HpEigenpair e;
  e.p = p;
  e.z = z;
  e.source = std::abs(d1) <= std::abs(d2) ? RootSource::delta1_root : RootSource::delta2_root;

  const auto& g = grid();
  const std::size_t n = g.size();
  std::vector<double> v1(n), v2(n), w2(n);
  for (std::size_t i = 0; i < n; ++i) {
    v1[i] = model_->v1(g.node(i));
    v2[i] = model_->v2(g.node(i));
    w2[i] = model_->w2(p, g.node(i));
  }
  double f0 = null(0);
  double C = null(1);
  std::vector<double> f1(n);
  for (std::size_t i = 0; i < n; ++i) f1[i] = (v2[i] * C - kInvSqrt2 * v1[i] * f0) / (w2[i] - z);
  double norm2 = f0 * f0;
  for (double x : f1) norm2 += g.weight() * x * x;
  double norm = std::sqrt(norm2);
  // Deterministic sign: largest component positive.
  double big = f0;
  for (double x : f1) if (std::abs(x) > std::abs(big)) big = x;
  if (big < 0.0) norm = -norm;
  f0 /= norm;
  C /= norm;
  for (double& x : f1) x /= norm;

  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s1 += g.weight() * v1[i] * f1[i];
    s2 += g.weight() * v2[i] * f1[i];
  }
  const double r0 = (model_->w1(p) - z) * f0 + kInvSqrt2 * s1;
  double r2 = r0 * r0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = kInvSqrt2 * v1[i] * f0 + (w2[i] - z) * f1[i] - v2[i] * s2;
    r2 += g.weight() * r * r;
  }
  e.f0 = f0;
  e.f1 = std::move(f1);
  e.channel_coefficient = C;
  e.residual = std::sqrt(r2);
  return e;
}

std::vector<Point3> p_sweep(int per_axis) {
  if (per_axis < 2) throw InvalidArgument("sweep needs at least 2 points per axis");
  auto nodes = TorusGrid::build(per_axis, GridMode::base, false).nodes();
  if (per_axis % 2 != 0) nodes.push_back({0.0, 0.0, 0.0});
  return nodes;
}

RegimeClass classify_regime(const FriedrichsFamily& family, int alpha, int sweep_per_axis) {
  if (alpha != 1 && alpha != 2) throw InvalidArgument("channel index must be 1 or 2");
  RegimeClass rc;
  rc.alpha = alpha;
  const double m = family.m();
  if (alpha == 2 && family.channel_vanishes(2)) {
    rc.regime = Regime::pos;
    rc.min_value = rc.max_value = 1.0;
    rc.note = "form factor vanishes; determinant is identically 1";
    return rc;
  }
  const auto sweep = p_sweep(sweep_per_axis);
  std::vector<double> vals(sweep.size());
  std::vector<double> errs(sweep.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto e = family.delta(alpha, sweep[i], m, Threshold::refined);
    vals[i] = e.value;
    errs[i] = e.error_estimate;
  }
  std::vector<std::size_t> order(sweep.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });

  auto dval = [&](const std::vector<double>& x, double sign) {
    return sign * family.delta(alpha, as_point(x), m, Threshold::refined).value;
  };
  const double step = 0.5 * kTwoPi / sweep_per_axis;
  const std::size_t starts = std::min<std::size_t>(3, order.size());
  rc.min_value = std::numeric_limits<double>::infinity();
  rc.max_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < starts; ++k) {
    const auto& p = sweep[order[k]];
    auto r = detail::pattern_search([&](const auto& x) { return dval(x, 1.0); }, {p[0], p[1], p[2]},
                                    step, 1e-6, 800);
    if (r.value < rc.min_value) {
      rc.min_value = r.value;
      rc.argmin = wrap_base(as_point(r.x));
    }
    const auto& q = sweep[order[order.size() - 1 - k]];
    auto s = detail::pattern_search([&](const auto& x) { return dval(x, -1.0); }, {q[0], q[1], q[2]},
                                    step, 1e-6, 800);
    if (-s.value > rc.max_value) {
      rc.max_value = -s.value;
      rc.argmax = wrap_base(as_point(s.x));
    }
  }
  rc.min_error = family.delta(alpha, rc.argmin, m, Threshold::refined).error_estimate;
  rc.max_error = family.delta(alpha, rc.argmax, m, Threshold::refined).error_estimate;
  rc.tolerance = std::max(1e-6, 10.0 * std::max(rc.min_error, rc.max_error));
  const double tol = rc.tolerance;
  if (std::abs(rc.min_value) <= tol || std::abs(rc.max_value) <= tol) {
    rc.regime = Regime::ambiguous;
    rc.note = "extremal determinant value within resolution of zero";
  } else if (rc.min_value > 0.0) {
    rc.regime = Regime::pos;
  } else if (rc.max_value < 0.0) {
    rc.regime = Regime::neg;
  } else {
    rc.regime = Regime::mixed;
  }
  return rc;
}

ZeroPoint fit_vanishing_order(const FriedrichsFamily& family, int alpha, const Point3& point,
                              double z, double radius) {
  ZeroPoint zp;
  zp.point = point;
  zp.value = family.delta(alpha, point, z).value;
  std::vector<Point3> dirs;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        // One representative per line through the origin.
        const int first = a != 0 ? a : (b != 0 ? b : c);
        if (first < 0) continue;
        const double len = std::sqrt(static_cast<double>(a * a + b * b + c * c));
        dirs.push_back({a / len, b / len, c / len});
      }
  std::vector<double> xs, ys, rs, ds;
  const int samples = 7;
  for (const auto& u : dirs) {
    for (double sign : {1.0, -1.0}) {
      for (int k = 0; k < samples; ++k) {
        const double r = radius * std::pow(8.0, -static_cast<double>(k) / (samples - 1));
        const Point3 q{point[0] + sign * r * u[0], point[1] + sign * r * u[1],
                       point[2] + sign * r * u[2]};
        const double d = std::abs(family.delta(alpha, q, z).value);
        if (d <= 0.0) continue;
        xs.push_back(std::log(r));
        ys.push_back(std::log(d));
        rs.push_back(r);
        ds.push_back(d);
      }
    }
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  zp.order = sxy / sxx;
  const double icpt = my - zp.order * mx;
  double rss = 0.0;
  zp.order_constant = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (icpt + zp.order * xs[i]);
    rss += e * e;
    zp.order_constant = std::min(zp.order_constant, ds[i] / std::pow(rs[i], zp.order));
  }
  zp.fit_rms = std::sqrt(rss / n);

  const double h = 1e-3;
  auto f = [&](const Point3& q) { return family.delta(alpha, q, z).value; };
  const double f0 = f(point);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      double v;
      if (i == j) {
        Point3 a = point, b = point;
        a[i] += h;
        b[i] -= h;
        v = (f(a) - 2.0 * f0 + f(b)) / (h * h);
      } else {
        Point3 pp = point, pm = point, mp = point, mm = point;
        pp[i] += h; pp[j] += h;
        pm[i] += h; pm[j] -= h;
        mp[i] -= h; mp[j] += h;
        mm[i] -= h; mm[j] -= h;
        v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
      }
      zp.hessian(i, j) = v;
      zp.hessian(j, i) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(zp.hessian, Eigen::EigenvaluesOnly);
  zp.hessian_min_eigenvalue = es.eigenvalues()(0);
  return zp;
}

namespace {

// Local optimization of the branch root from the best sweep nodes. sign = +1
// minimizes, -1 maximizes. Returns (value, point) pairs, one per start.
std::vector<std::pair<double, Point3>> refine_roots(const FriedrichsFamily& family, int alpha,
                                                    const std::vector<BranchSample>& samples,
                                                    double sign, int starts, double step) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].below) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return sign * *samples[a].below < sign * *samples[b].below;
  });
  if (idx.size() > static_cast<std::size_t>(starts)) idx.resize(starts);
  auto obj = [&](const std::vector<double>& x) {
    const auto r = family.eigenvalue_below(alpha, as_point(x));
    return r.z ? sign * *r.z : std::numeric_limits<double>::infinity();
  };
  std::vector<std::pair<double, Point3>> out;
  for (auto i : idx) {
    const auto& p = samples[i].p;
    auto r = detail::pattern_search(obj, {p[0], p[1], p[2]}, step, 1e-7, 1500);
    out.emplace_back(sign * r.value, wrap_base(as_point(r.x)));
  }
  return out;
}

std::vector<ZeroPoint> zero_set(const FriedrichsFamily& family, int alpha,
                                const std::vector<std::pair<double, Point3>>& starts, double z,
                                double sign, const SweepOptions& opts) {
  // sign = +1: Delta >= 0 with zeros at minima; sign = -1: Delta <= 0.
  auto obj = [&](const std::vector<double>& x) {
    const Point3 p = as_point(x);
    if (z >= family.grid_fiber_min(p)) return std::numeric_limits<double>::infinity();
    return sign * family.delta(alpha, p, z).value;
  };
  const double tol = 1e-8 * family.scale();
  std::vector<ZeroPoint> zeros;
  for (const auto& s : starts) {
    const auto& p = s.second;
    auto r = detail::pattern_search(obj, {p[0], p[1], p[2]}, 1e-3, 1e-10, 2000);
    if (!(std::abs(r.value) <= tol)) continue;
    const Point3 q = wrap_base(as_point(r.x));
    bool dup = false;
    for (const auto& zpt : zeros) dup = dup || torus_distance(zpt.point, q) <= opts.merge_radius;
    if (dup) continue;
    zeros.push_back(fit_vanishing_order(family, alpha, q, z, opts.fit_radius));
  }
  return zeros;
}

}  // namespace

BranchData two_particle_branch(const FriedrichsFamily& family, int alpha, const SweepOptions& opts) {
  BranchData b;
  b.alpha = alpha;
  b.regime = classify_regime(family, alpha, opts.per_axis);
  const auto sweep = p_sweep(opts.per_axis);
  for (const auto& p : sweep) {
    BranchSample s;
    s.p = p;
    const auto below = family.eigenvalue_below(alpha, p);
    s.below = below.z;
    s.residual = below.residual;
    const auto above = family.roots_above(alpha, p, s.residual);
    if (!above.empty()) (alpha == 1 ? s.above1 : s.above2) = above.front();
    b.samples.push_back(s);
  }
  for (const auto& s : b.samples) {
    const auto& a = alpha == 1 ? s.above1 : s.above2;
    if (a) {
      b.above_min = b.above_min ? std::min(*b.above_min, *a) : *a;
      b.above_max = b.above_max ? std::max(*b.above_max, *a) : *a;
    }
  }
  const bool any = std::any_of(b.samples.begin(), b.samples.end(),
                               [](const auto& s) { return s.below.has_value(); });
  if (!any) {
    if (b.regime.regime == Regime::mixed || b.regime.regime == Regime::neg) {
      throw InvariantViolation("no branch roots found although the threshold determinant is negative");
    }
    b.empty = true;
    b.note = "determinant positive at the threshold for all p; no branch below m";
    return b;
  }
  b.empty = false;
  const double step = 0.5 * kTwoPi / opts.per_axis;
  const auto lows = refine_roots(family, alpha, b.samples, 1.0, opts.multistart, step);
  const auto highs = refine_roots(family, alpha, b.samples, -1.0, opts.multistart, step);
  b.E_min = std::numeric_limits<double>::infinity();
  for (const auto& l : lows) b.E_min = std::min(b.E_min, l.first);
  b.sup_root = -std::numeric_limits<double>::infinity();
  for (const auto& h : highs) b.sup_root = std::max(b.sup_root, h.first);
  const double m = family.m();
  // Measured, not inferred from the regime: the supremum of the roots must
  // come within a relative 1e-6 of the threshold.
  b.reaches_m = b.sup_root >= m - 1e-6 * family.scale();
  b.E_max = b.reaches_m ? m : b.sup_root;
  if (b.regime.regime == Regime::ambiguous) b.note = "regime ambiguous at this resolution";

  std::vector<std::pair<double, Point3>> min_starts;
  for (const auto& l : lows)
    if (l.first - b.E_min <= 1e-6 * family.scale()) min_starts.push_back(l);
  b.min_zeros = zero_set(family, alpha, min_starts, b.E_min, 1.0, opts);
  if (!b.reaches_m) {
    std::vector<std::pair<double, Point3>> max_starts;
    for (const auto& h : highs)
      if (b.sup_root - h.first <= 1e-6 * family.scale()) max_starts.push_back(h);
    b.max_zeros = zero_set(family, alpha, max_starts, b.E_max, -1.0, opts);
  }
  b.positivity_off_zeros = std::numeric_limits<double>::infinity();
  for (const auto& s : b.samples) {
    bool near = false;
    for (const auto& zp : b.min_zeros) near = near || torus_distance(zp.point, s.p) < opts.fit_radius;
    if (near || b.E_min >= family.grid_fiber_min(s.p)) continue;
    b.positivity_off_zeros = std::min(b.positivity_off_zeros, family.delta(alpha, s.p, b.E_min).value);
  }
  return b;
}

void write_branch_csv(const BranchData& branch, std::ostream& out) {
  out << "p1,p2,p3,z_below,z_above1,z_above2,delta_residual\n";
  out << std::setprecision(17);
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  for (const auto& s : branch.samples) {
    out << s.p[0] << ',' << s.p[1] << ',' << s.p[2] << ',';
    opt(s.below);
    out << ',';
    opt(s.above1);
    out << ',';
    opt(s.above2);
    out << ',' << s.residual << '\n';
  }
}

}  // namespace fockcut
