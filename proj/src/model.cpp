#include "fockcut/model.hpp"

#include "fockcut/detail/pattern_search.hpp"
#include "fockcut/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fockcut {

double example_dispersion(const Point3& p) {
  return (1.0 - std::cos(p[0])) + (1.0 - std::cos(p[1])) + (1.0 - std::cos(p[2]));
}

double unit_form_factor(const ExampleParams& params, int alpha, const Point3& p) {
  if (alpha == 1) {
    return params.c[0] * std::cos(p[0]) + params.c[1] * std::cos(p[1]) + params.c[2] * std::cos(p[2]);
  }
  if (alpha == 2) {
    return params.d[0] * std::cos(0.5 * p[0]) + params.d[1] * std::cos(0.5 * p[1]) +
           params.d[2] * std::cos(0.5 * p[2]);
  }
  throw InvalidArgument("channel index must be 1 or 2");
}

ModelFunctions example_family(const ExampleParams& params) {
  if (!(params.mu1 > 0.0) || !(params.mu2 > 0.0) || !std::isfinite(params.mu1) ||
      !std::isfinite(params.mu2)) {
    std::ostringstream os;
    os << "coupling strengths must be positive and finite (mu1=" << params.mu1
       << ", mu2=" << params.mu2 << ")";
    throw InvalidArgument(os.str());
  }
  ModelFunctions m;
  m.label = "example";
  m.w0 = params.w0;
  m.w1 = [](const Point3&) { return 1.0; };
  const double a0 = params.v0_amplitude;
  m.v0 = [a0](const Point3& p) { return a0 * (std::cos(p[0]) + std::cos(p[1]) + std::cos(p[2])); };
  const double s1 = std::sqrt(2.0 * params.mu1);
  const double s2 = std::sqrt(params.mu2);
  m.v1 = [params, s1](const Point3& p) { return s1 * unit_form_factor(params, 1, p); };
  m.v2 = [params, s2](const Point3& p) { return s2 * unit_form_factor(params, 2, p); };
  m.dispersion = example_dispersion;
  m.dispersion_min = 0.0;
  m.dispersion_max = 6.0;
  m.w2 = [](const Point3& p, const Point3& q) {
    return example_dispersion(p) + example_dispersion(q);
  };
  m.p0 = {0.0, 0.0, 0.0};
  m.orthogonal_index = 2;
  return m;
}

double model_scale(double m, double M) { return std::max({1.0, std::abs(m), std::abs(M)}); }

namespace {

std::vector<double> to_vec(const Point3& p, const Point3& q) {
  return {p[0], p[1], p[2], q[0], q[1], q[2]};
}

}  // namespace

W2Extrema min_max_w2(const ModelFunctions& model, const TorusGrid& sample_grid) {
  if (!model.w2) throw InvalidArgument("model has no two-particle dispersion");
  const auto& nodes = sample_grid.nodes();
  W2Extrema out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : nodes)
    for (const auto& q : nodes) {
      const double v = model.w2(p, q);
      if (!std::isfinite(v)) throw NumericDomainError("two-particle dispersion is not finite");
      if (v < lo) {
        lo = v;
        out.argmin_p = p;
        out.argmin_q = q;
      }
      if (v > hi) {
        hi = v;
        out.argmax_p = p;
        out.argmax_q = q;
      }
    }
  auto w2v = [&](const std::vector<double>& x) {
    return model.w2({x[0], x[1], x[2]}, {x[3], x[4], x[5]});
  };
  const double step = 0.5 * sample_grid.spacing();
  auto rmin = detail::pattern_search(w2v, to_vec(out.argmin_p, out.argmin_q), step, 1e-9);
  auto rmax = detail::pattern_search([&](const std::vector<double>& x) { return -w2v(x); },
                                     to_vec(out.argmax_p, out.argmax_q), step, 1e-9);
  out.m = std::min(lo, rmin.value);
  out.M = std::max(hi, -rmax.value);
  if (rmin.value < lo) {
    out.argmin_p = {rmin.x[0], rmin.x[1], rmin.x[2]};
    out.argmin_q = {rmin.x[3], rmin.x[4], rmin.x[5]};
  }
  if (-rmax.value > hi) {
    out.argmax_p = {rmax.x[0], rmax.x[1], rmax.x[2]};
    out.argmax_q = {rmax.x[3], rmax.x[4], rmax.x[5]};
  }
  return out;
}

CouplingThresholds mu_thresholds(const ExampleParams& params, int alpha, const TorusGrid& grid,
                                 int levels) {
  if (alpha != 1 && alpha != 2) throw InvalidArgument("channel index must be 1 or 2");
  if (levels < 1) throw InvalidArgument("at least one quadrature level is required");
  for (const auto& s : grid.nodes()) {
    if (example_dispersion(s) <= 0.0) {
      throw SingularNodeError("threshold integrand is singular at a grid node; use an offset grid");
    }
  }
  auto singular = [&](const Point3& s) {
    const double v = unit_form_factor(params, alpha, s);
    return v * v / example_dispersion(s);
  };
  auto regular = [&](const Point3& s) {
    const double v = unit_form_factor(params, alpha, s);
    return v * v / (6.0 + example_dispersion(s));
  };
  const auto a = integrate_refined(grid, levels, singular);
  const auto b = integrate_refined(grid, levels, regular);
  if (!(a.value > 0.0) || !(b.value > 0.0)) {
    throw InvalidArgument("form factor vanishes identically; thresholds are undefined");
  }
  CouplingThresholds t;
  t.alpha = alpha;
  t.singular_integral = a.value;
  t.regular_integral = b.value;
  t.lower = 1.0 / a.value;
  t.upper = 1.0 / b.value;
  t.lower_error = a.error_estimate / (a.value * a.value);
  t.upper_error = b.error_estimate / (b.value * b.value);
  return t;
}

std::vector<ScalarField> periodic_test_functions() {
  std::vector<ScalarField> fs;
  fs.emplace_back([](const Point3&) { return 1.0; });
  for (int i = 0; i < 3; ++i) {
    fs.emplace_back([i](const Point3& s) { return std::cos(s[i]); });
    fs.emplace_back([i](const Point3& s) { return std::sin(s[i]); });
    fs.emplace_back([i](const Point3& s) { return std::cos(2.0 * s[i]); });
    for (int j = i + 1; j < 3; ++j) {
      fs.emplace_back([i, j](const Point3& s) { return std::cos(s[i]) * std::cos(s[j]); });
    }
  }
  return fs;
}

OrthogonalityReport check_orthogonality(const ModelFunctions& model, const TorusGrid& grid,
                                        const std::vector<ScalarField>& test_functions) {
  OrthogonalityReport r;
  r.index = model.orthogonal_index;
  const ScalarField& v = model.orthogonal_index == 1 ? model.v1 : model.v2;
  std::vector<double> vs(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vs[i] = v(grid.node(i));
  double vnorm2 = 0.0;
  for (double x : vs) vnorm2 += x * x;
  vnorm2 *= grid.weight();
  for (const auto& g : test_functions) {
    double dot = 0.0;
    double gnorm2 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double gi = g(grid.node(i));
      dot += vs[i] * gi;
      gnorm2 += gi * gi;
    }
    dot *= grid.weight();
    gnorm2 *= grid.weight();
    r.values.push_back(dot);
    r.max_abs = std::max(r.max_abs, std::abs(dot));
    // Test functions that vanish on the nodes carry no relative information.
    if (gnorm2 <= 1e-12 * grid.total_measure()) continue;
    const double denom = std::sqrt(vnorm2 * gnorm2);
    if (denom > 0.0) r.max_relative = std::max(r.max_relative, std::abs(dot) / denom);
  }
  return r;
}

QuadraticBounds quadratic_bounds_check(const ModelFunctions& model, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("neighborhood radius must be positive");
  QuadraticBounds qb;
  qb.delta = delta;
  const Point3 p0 = model.p0;
  auto f = [&](const std::array<double, 6>& x) {
    return model.w2({x[0], x[1], x[2]}, {x[3], x[4], x[5]});
  };
  const std::array<double, 6> x0{p0[0], p0[1], p0[2], p0[0], p0[1], p0[2]};
  const double m = f(x0);
  const double h = 1e-4 * kPi;
  Eigen::Matrix<double, 6, 6> hess;
  for (int i = 0; i < 6; ++i)
    for (int j = i; j < 6; ++j) {
      double v;
      if (i == j) {
        auto a = x0, b = x0;
        a[i] += h;
        b[i] -= h;
        v = (f(a) - 2.0 * m + f(b)) / (h * h);
      } else {
        auto pp = x0, pm = x0, mp = x0, mm = x0;
        pp[i] += h; pp[j] += h;
        pm[i] += h; pm[j] -= h;
        mp[i] -= h; mp[j] += h;
        mm[i] -= h; mm[j] -= h;
        v = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
      }
      hess(i, j) = v;
      hess(j, i) = v;
    }
  qb.W1 = hess.block<3, 3>(0, 0);
  qb.W2 = hess.block<3, 3>(0, 3);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(hess, Eigen::EigenvaluesOnly);
  qb.hessian_min_eigenvalue = es.eigenvalues()(0);
  const double hscale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (!(qb.hessian_min_eigenvalue > 1e-6 * hscale)) {
    std::ostringstream os;
    os << "Hessian of the two-particle dispersion at the minimum is not positive definite "
          "(smallest eigenvalue "
       << qb.hessian_min_eigenvalue << ")";
    throw DegenerateMinimumError(os.str());
  }

  // Local lattice inside the ball of radius delta around p0.
  std::vector<Point3> local;
  const int k = 8;
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      for (int c = 0; c < k; ++c) {
        const Point3 u{delta * (-1.0 + (2.0 * a + 1.0) / k), delta * (-1.0 + (2.0 * b + 1.0) / k),
                       delta * (-1.0 + (2.0 * c + 1.0) / k)};
        if (norm3(u) < delta) local.push_back({p0[0] + u[0], p0[1] + u[1], p0[2] + u[2]});
      }
  local.push_back(p0);
  double c1 = std::numeric_limits<double>::infinity();
  double c2 = 0.0;
  for (const auto& p : local)
    for (const auto& q : local) {
      const double r2 = std::pow(torus_distance(p, p0), 2) + std::pow(torus_distance(q, p0), 2);
      if (r2 == 0.0) continue;
      const double ratio = (model.w2(p, q) - m) / r2;
      c1 = std::min(c1, ratio);
      c2 = std::max(c2, ratio);
      ++qb.pairs_checked;
    }
  // Pairs with at least one point outside the ball.
  const auto coarse = TorusGrid::build(10, GridMode::base, false);
  double c3 = std::numeric_limits<double>::infinity();
  for (const auto& p : coarse.nodes()) {
    const bool p_in = torus_distance(p, p0) < delta;
    for (const auto& q : coarse.nodes()) {
      if (p_in && torus_distance(q, p0) < delta) continue;
      c3 = std::min(c3, model.w2(p, q) - m);
      ++qb.pairs_checked;
    }
  }
  // Shell just outside the ball, paired with the local lattice.
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c) {
        if (a == 0 && b == 0 && c == 0) continue;
        const double len = std::sqrt(static_cast<double>(a * a + b * b + c * c));
        const Point3 p{p0[0] + delta * a / len, p0[1] + delta * b / len, p0[2] + delta * c / len};
        for (const auto& q : local) {
          c3 = std::min(c3, model.w2(p, q) - m);
          c3 = std::min(c3, model.w2(q, p) - m);
          qb.pairs_checked += 2;
        }
      }
  qb.C1 = c1;
  qb.C2 = c2;
  qb.C3 = c3;
  qb.holds = c1 > 0.0 && c1 <= c2 && c3 > 0.0;
  return qb;
}

}  // namespace fockcut
