#include "fockcut/weinberg.hpp"

#include "fockcut/eigensolver.hpp"
#include "fockcut/errors.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace fockcut {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

std::string point_text(const Point3& p) {
  std::ostringstream os;
  os << '(' << p[0] << ", " << p[1] << ", " << p[2] << ')';
  return os.str();
}

// Square root of xi * Delta at a point; the caller has fixed xi.
double balanced_root(const FriedrichsFamily& family, int alpha, int sign, const Point3& p, double z) {
  const double d = family.delta(alpha, p, z, Threshold::grid).value;
  const double v = sign * d;
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << "xi * Delta_" << alpha << " = " << v << " <= 0 at node " << point_text(p) << " for z = " << z;
    throw ForbiddenRegionError(os.str());
  }
  return std::sqrt(v);
}

}  // namespace

SignPair xi(const FriedrichsFamily& family, double z, int sweep_per_axis) {
  if (!(z <= family.m())) throw ForbiddenRegionError("z must not exceed the threshold m");
  const auto& nodes = family.grid().nodes();
  const auto sweep = p_sweep(sweep_per_axis);
  // Off the operator grid a determinant within this margin of zero carries no
  // sign information (z at a branch edge attained between nodes).
  const double margin = 1e-9 * family.scale();
  std::array<int, 2> s{0, 0};
  for (int alpha = 1; alpha <= 2; ++alpha) {
    int& sign = s[alpha - 1];
    auto visit = [&](const Point3& p, bool node) {
      const double d = family.delta(alpha, p, z, Threshold::grid).value;
      if (!node && std::abs(d) <= margin) return;
      const int here = sign_of(d);
      if (here == 0 || (sign != 0 && here != sign)) {
        std::ostringstream os;
        os << "Delta_" << alpha << "(.; " << z << ") changes sign or vanishes near "
           << point_text(p) << "; z lies in the essential spectrum or too close to a branch";
        throw ForbiddenRegionError(os.str());
      }
      sign = here;
    };
    for (const auto& p : nodes) visit(p, true);
    for (const auto& p : sweep) visit(p, false);
  }
  return {s[0], s[1]};
}

WeinbergOperator WeinbergOperator::assemble(const FriedrichsFamily& family, double z,
                                            const OperatorLimits& limits) {
  WeinbergOperator W;
  W.z_ = z;
  W.xi_ = xi(family, z);
  const auto& model = family.model();
  const auto& grid = family.grid();
  const auto N = static_cast<Eigen::Index>(grid.size());
  const std::size_t npairs = grid.size() * (grid.size() + 1) / 2;
  if (npairs > limits.max_pairs || 1 + grid.size() + npairs > 4 * limits.max_dense_dimension) {
    throw ResourceError("Weinberg operator is assembled dense; grid too large");
  }
  const auto P = static_cast<Eigen::Index>(npairs);
  const double w = grid.weight();
  const double sw = std::sqrt(w);
  const double x1 = W.xi_.first;
  const double x2 = W.xi_.second;
  W.weight_ = w;
  W.layout_ = {1, grid.size(), npairs};

  Eigen::VectorXd v0(N);
  W.v1_.resize(N);
  W.v2_.resize(N);
  W.R1_.resize(N);
  W.R2_.resize(N);
  W.G_.resize(N, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& s = grid.node(static_cast<std::size_t>(i));
    v0[i] = model.v0 ? model.v0(s) : 0.0;
    W.v1_[i] = model.v1(s);
    W.v2_[i] = model.v2(s);
    W.R1_[i] = balanced_root(family, 1, W.xi_.first, s, z);
    W.R2_[i] = balanced_root(family, 2, W.xi_.second, s, z);
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double g = 1.0 / (model.w2(s, grid.node(static_cast<std::size_t>(j))) - z);
      W.G_(i, j) = g;
      W.G_(j, i) = g;
    }
  }
  const SymPairIndex pairs(grid.size());
  W.first_.resize(npairs);
  W.second_.resize(npairs);
  for (std::size_t q = 0; q < npairs; ++q) {
    W.first_[q] = pairs.first(q);
    W.second_[q] = pairs.second(q);
  }
  const auto& v1 = W.v1_;
  const auto& v2 = W.v2_;
  const auto& R1 = W.R1_;
  const auto& R2 = W.R2_;
  const auto& G = W.G_;

  // B[v2] in orthonormal coordinates.
  Eigen::MatrixXd B2 = Eigen::MatrixXd::Zero(N, P);
  Eigen::MatrixXd Smat = Eigen::MatrixXd::Zero(P, N);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(P, N);
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(P, N);
  for (Eigen::Index q = 0; q < P; ++q) {
    const auto a = static_cast<Eigen::Index>(W.first_[q]);
    const auto b = static_cast<Eigen::Index>(W.second_[q]);
    const double c = a == b ? 1.0 : kSqrt2;
    const double g = G(a, b);
    if (a == b) {
      B2(a, q) = sw * v2[a];
    } else {
      B2(a, q) = sw * v2[b] / kSqrt2;
      B2(b, q) = sw * v2[a] / kSqrt2;
    }
    Smat(q, b) += -sw * c * g * v1[a] / 2.0;
    Smat(q, a) += -sw * c * g * v1[b] / 2.0;
    Q(q, a) += w * c * (-x2 * g / 2.0) * v1[a] * v2[b];
    Q(q, b) += w * c * (-x2 * g / 2.0) * v1[b] * v2[a];
    U(q, a) += w * c * x2 * v2[a] * v2[b] * g;
    U(q, b) += w * c * x2 * v2[a] * v2[b] * g;
  }

  const Eigen::VectorXd inv1 = R1.cwiseInverse();
  const Eigen::VectorXd inv2 = R2.cwiseInverse();
  const Eigen::VectorXd v1r = v1.cwiseProduct(inv1);
  const Eigen::VectorXd v2r1 = v2.cwiseProduct(inv1);
  const Eigen::Matrix<double, 1, Eigen::Dynamic> W01 = (-sw * v0.cwiseProduct(inv1)).transpose();
  const Eigen::VectorXd W10 = -x1 * sw * v0.cwiseProduct(inv1);
  const Eigen::MatrixXd W11 = (w * x1 / 2.0) * (v1r * v1r.transpose()).cwiseProduct(G);
  // M12(i, k) = -xi1 v2(i)/R1(i) * sqrt(w) v1(k) G(i, k) / R2(k)
  const Eigen::MatrixXd M12 =
      (-x1 * v2r1).asDiagonal() * G * (sw * v1.cwiseProduct(inv2)).asDiagonal();
  const Eigen::MatrixXd W12 = M12 * B2;
  const Eigen::VectorXd W20 = Smat * W10;
  // Rm(i, k) = sqrt(w) v2(k) G(i, k) / R1(k); Ym uses R2 instead.
  const Eigen::MatrixXd Rm = G * (sw * v2.cwiseProduct(inv1)).asDiagonal();
  const Eigen::MatrixXd Ym = G * (sw * v2.cwiseProduct(inv2)).asDiagonal();
  const Eigen::MatrixXd W21 = Q * (inv2.asDiagonal() * Rm) + Smat * W11;
  const Eigen::MatrixXd W22 = U * ((inv2.asDiagonal() * Ym) * B2) + Smat * W12;

  const Eigen::Index dim = 1 + N + P;
  W.W_ = Eigen::MatrixXd::Zero(dim, dim);
  W.W_(0, 0) = 1.0 + z - model.w0;
  W.W_.block(0, 1, 1, N) = W01;
  W.W_.block(1, 0, N, 1) = W10;
  W.W_.block(1, 1, N, N) = W11;
  W.W_.block(1, 1 + N, N, P) = W12;
  W.W_.block(1 + N, 0, P, 1) = W20;
  W.W_.block(1 + N, 1, P, N) = W21;
  W.W_.block(1 + N, 1 + N, P, P) = W22;
  return W;
}

Eigen::MatrixXd WeinbergOperator::block(int row, int col) const {
  if (row < 0 || row > 2 || col < 0 || col > 2) throw InvalidArgument("block index out of range");
  const std::array<Eigen::Index, 3> size{static_cast<Eigen::Index>(layout_.vacuum),
                                         static_cast<Eigen::Index>(layout_.one),
                                         static_cast<Eigen::Index>(layout_.two)};
  const std::array<Eigen::Index, 3> off{0, size[0], size[0] + size[1]};
  return W_.block(off[row], off[col], size[row], size[col]);
}

WeinbergOperator::FixedPoint WeinbergOperator::fixed_point_residual(const Eigen::VectorXd& f) const {
  const auto N = static_cast<Eigen::Index>(layout_.one);
  const auto P = static_cast<Eigen::Index>(layout_.two);
  if (f.size() != 1 + N + P) throw InvalidArgument("eigenvector length does not match W");
  const double w = weight_;
  const double sw = std::sqrt(w);
  auto mult = [&](Eigen::Index q) { return first_[q] == second_[q] ? 1.0 : kSqrt2; };

  const double f0 = f[0];
  const Eigen::VectorXd f1 = f.segment(1, N) / sw;
  Eigen::MatrixXd F2(N, N);
  for (Eigen::Index q = 0; q < P; ++q) {
    const double val = f[1 + N + q] / (w * mult(q));
    F2(first_[q], second_[q]) = val;
    F2(second_[q], first_[q]) = val;
  }
  const Eigen::VectorXd fbar = w * F2 * v2_;
  const Eigen::VectorXd phi1 = R1_.cwiseProduct(f1);
  const Eigen::VectorXd phibar = R2_.cwiseProduct(fbar);

  auto coords = [&](double g0, const Eigen::VectorXd& g1, const Eigen::MatrixXd& g2) {
    Eigen::VectorXd x(1 + N + P);
    x[0] = g0;
    x.segment(1, N) = sw * g1;
    for (Eigen::Index q = 0; q < P; ++q) x[1 + N + q] = w * mult(q) * g2(first_[q], second_[q]);
    return x;
  };
  // Two-particle component rebuilt from one-particle data and the
  // v2-contraction.
  auto rebuild = [&](const Eigen::VectorXd& a1, const Eigen::VectorXd& ab) {
    Eigen::MatrixXd t = (ab * v2_.transpose() + v2_ * ab.transpose()).cwiseProduct(G_) -
                        0.5 * (a1 * v1_.transpose() + v1_ * a1.transpose()).cwiseProduct(G_);
    return t;
  };
  const std::vector<std::pair<std::string, Eigen::VectorXd>> cand = {
      {"raw", f},
      {"rescaled", coords(f0, phi1, F2)},
      {"eq7_both", coords(f0, phi1, rebuild(phi1, phibar))},
      {"eq7_phi1", coords(f0, phi1, rebuild(phi1, fbar))},
  };
  FixedPoint out;
  for (const auto& [name, g] : cand) {
    const double norm = g.norm();
    const double r = norm > 0.0 ? (W_ * g - g).norm() / norm : std::numeric_limits<double>::infinity();
    out.candidates.push_back({name, r});
  }
  for (std::size_t i = 1; i < out.candidates.size(); ++i)
    if (out.candidates[i].residual < out.candidates[out.best].residual) out.best = i;
  return out;
}

std::array<std::array<double, 3>, 3> hs_norms(const WeinbergOperator& W) {
  std::array<std::array<double, 3>, 3> out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = W.block(i, j).norm();
  return out;
}

std::vector<double> singular_values(const Eigen::MatrixXd& A, int count) {
  std::vector<double> out;
  if (A.size() == 0 || count <= 0) return out;
  const Eigen::Index small = std::min(A.rows(), A.cols());
  if (small <= 600) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    const auto& s = svd.singularValues();
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(count, s.size()); ++i) out.push_back(s[i]);
    return out;
  }
  LinearOperator op;
  op.dimension = A.cols();
  op.apply = [&A](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = -(A.transpose() * (A * x)); };
  EigenSolverOptions opts;
  opts.scale = std::max(1.0, A.cwiseAbs().rowwise().sum().maxCoeff() * A.cwiseAbs().colwise().sum().maxCoeff());
  opts.tolerance = 1e-12;
  const int k = static_cast<int>(std::min<Eigen::Index>(count, small));
  const auto r = lowest_eigenvalues(op, k, std::numeric_limits<double>::infinity(), opts);
  for (Eigen::Index i = 0; i < r.values.size(); ++i) out.push_back(std::sqrt(std::max(0.0, -r.values[i])));
  return out;
}

namespace {

double operator_norm(const Eigen::MatrixXd& A) {
  const auto s = singular_values(A, 1);
  return s.empty() ? 0.0 : s.front();
}

}  // namespace

ContinuityTable continuity_modulus(const FriedrichsFamily& family, const std::vector<double>& zs,
                                   const OperatorLimits& limits) {
  ContinuityTable t;
  t.z = zs;
  std::vector<WeinbergOperator> ops;
  ops.reserve(zs.size());
  for (double z : zs) ops.push_back(WeinbergOperator::assemble(family, z, limits));
  t.distance.assign(zs.size(), std::vector<double>(zs.size(), 0.0));
  for (std::size_t i = 0; i < zs.size(); ++i) {
    for (std::size_t j = i + 1; j < zs.size(); ++j) {
      const double d = operator_norm(ops[i].matrix() - ops[j].matrix());
      t.distance[i][j] = d;
      t.distance[j][i] = d;
    }
  }
  return t;
}

EdgeApproach edge_approach(const FriedrichsFamily& family, double edge, double direction, int k_first,
                           int k_last, const OperatorLimits& limits) {
  if (direction == 0.0) throw InvalidArgument("approach direction must be nonzero");
  EdgeApproach e;
  e.edge = edge;
  const auto at_edge = WeinbergOperator::assemble(family, edge, limits);
  for (int k = k_first; k <= k_last; ++k) {
    const double z = edge + std::copysign(std::ldexp(1.0, -k), direction);
    const auto W = WeinbergOperator::assemble(family, z, limits);
    e.z.push_back(z);
    e.distance.push_back(operator_norm(W.matrix() - at_edge.matrix()));
  }
  e.monotone = true;
  for (std::size_t i = 1; i < e.distance.size(); ++i)
    e.monotone = e.monotone && e.distance[i] < e.distance[i - 1];
  return e;
}

std::string to_string(MajorantWindow window) {
  switch (window) {
    case MajorantWindow::below_min: return "below_min";
    case MajorantWindow::above_max: return "above_max";
    case MajorantWindow::near_threshold: return "near_threshold";
  }
  return "?";
}

namespace {

struct KernelContext {
  const FriedrichsFamily* family;
  double z;
  SignPair signs;
};

double root_at(const KernelContext& c, int alpha, const Point3& p) {
  const int s = alpha == 1 ? c.signs.first : c.signs.second;
  const double v = s * c.family->delta(alpha, p, c.z, Threshold::grid).value;
  return std::sqrt(std::max(v, 0.0));
}

// Continuum kernel of the two-particle block of W at (p, q; s, t).
double w22_kernel(const KernelContext& c, const Point3& p, const Point3& q, const Point3& s,
                  const Point3& t) {
  const auto& m = c.family->model();
  const double z = c.z;
  const double Gpq = 1.0 / (m.w2(p, q) - z);
  const double Gps = 1.0 / (m.w2(p, s) - z);
  const double Gqs = 1.0 / (m.w2(q, s) - z);
  const double v2p = m.v2(p), v2q = m.v2(q), v2s = m.v2(s), v2t = m.v2(t);
  const double v1p = m.v1(p), v1q = m.v1(q), v1s = m.v1(s);
  const double D2p = root_at(c, 2, p), D2q = root_at(c, 2, q), D2s = root_at(c, 2, s);
  const double D1p = root_at(c, 1, p), D1q = root_at(c, 1, q);
  const double x1 = c.signs.first, x2 = c.signs.second;
  const double direct = x2 * v2p * v2q * Gpq * v2s * v2t * (Gps / (D2p * D2s) + Gqs / (D2q * D2s));
  auto k12 = [&](double v2x, double D1x, double Gxs) { return -x1 * v2x / D1x * v1s * v2t * Gxs / D2s; };
  const double composed = -0.5 * Gpq * (v1p * k12(v2q, D1q, Gqs) + v1q * k12(v2p, D1p, Gps));
  return direct + composed;
}

}  // namespace

MajorantCheck kernel_majorant_check(const FriedrichsFamily& family, const EssentialSpectrum& essential,
                                    double z, double delta, std::uint64_t seed) {
  MajorantCheck out;
  out.z = z;
  out.delta = delta;
  const double m = family.m();
  double emin = std::numeric_limits<double>::infinity();
  std::optional<double> emax;
  std::vector<Point3> min_pts, max_pts;
  for (const auto& b : essential.branches) {
    if (b.empty || b.E_min >= m) continue;
    emin = std::min(emin, b.E_min);
    for (const auto& zp : b.min_zeros) min_pts.push_back(zp.point);
    if (b.regime.regime == Regime::neg) {
      emax = emax ? std::max(*emax, b.E_max) : b.E_max;
      for (const auto& zp : b.max_zeros) max_pts.push_back(zp.point);
    }
  }
  std::vector<Point3> singular;
  if (std::isfinite(emin) && z <= emin) {
    out.window = MajorantWindow::below_min;
    singular = min_pts;
  } else if (emax && z >= *emax && z < 0.5 * (m + *emax)) {
    out.window = MajorantWindow::above_max;
    singular = max_pts;
  } else if (z <= m && (!emax || z >= 0.5 * (m + *emax)) && (!std::isfinite(emin) || emax)) {
    out.window = MajorantWindow::near_threshold;
    singular = {family.model().p0};
  } else {
    throw InvalidArgument("z is not in a window covered by the kernel majorant");
  }
  if (singular.empty()) throw InvalidArgument("no singular points known for this window");

  KernelContext ctx{&family, z, xi(family, z)};
  auto rho = [&](const Point3& x) {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& s : singular) r = std::min(r, torus_distance(x, s));
    return r;
  };
  auto profile = [&](const Point3& p, const Point3& q, const Point3& s) {
    if (out.window != MajorantWindow::near_threshold) {
      double v = 1.0;
      for (const auto* x : {&p, &q, &s}) {
        const double r = rho(*x);
        if (r < delta) v *= 1.0 + 1.0 / std::max(r, 1e-300);
      }
      return v;
    }
    const double rp = rho(p), rq = rho(q), rs = rho(s);
    auto pair = [&](double a, double b) {
      return (a < delta && b < delta) ? 1.0 + 1.0 / std::max(a * a + b * b, 1e-300) : 1.0;
    };
    return pair(rp, rq) * pair(rp, rs) * pair(rq, rs);
  };

  std::mt19937_64 rng(seed);
  const double half = 0.5 * family.grid().period();
  std::uniform_real_distribution<double> coord(-half, half);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_point = [&] { return Point3{coord(rng), coord(rng), coord(rng)}; };
  auto near = [&](const Point3& c, double r) {
    Point3 d{gauss(rng), gauss(rng), gauss(rng)};
    const double n = norm3(d);
    return Point3{c[0] + r * d[0] / n, c[1] + r * d[1] / n, c[2] + r * d[2] / n};
  };
  auto ratio = [&](const Point3& p, const Point3& q, const Point3& s, const Point3& t) {
    const double k = std::abs(w22_kernel(ctx, p, q, s, t));
    return std::isfinite(k) ? k / profile(p, q, s) : std::numeric_limits<double>::infinity();
  };

  const int uniform = 1500;
  double fit = 0.0;
  for (int i = 0; i < uniform; ++i) fit = std::max(fit, ratio(random_point(), random_point(), random_point(), random_point()));
  double valid = 0.0;
  std::size_t count = static_cast<std::size_t>(uniform);
  for (int i = 0; i < uniform; ++i, ++count)
    valid = std::max(valid, ratio(random_point(), random_point(), random_point(), random_point()));
  for (const auto& c : singular) {
    for (int k = 1; k <= 12; ++k, count += 3) {
      const double r = delta * std::ldexp(1.0, -k);
      valid = std::max(valid, ratio(near(c, r), random_point(), random_point(), random_point()));
      valid = std::max(valid, ratio(near(c, r), near(c, r), near(c, r), random_point()));
      valid = std::max(valid, ratio(random_point(), near(c, r), near(c, r), random_point()));
    }
  }
  out.samples = count;
  out.fitted_constant = fit;
  if (fit == 0.0) {
    out.worst_ratio = valid == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    out.worst_ratio = valid / fit;
  }
  out.holds = out.worst_ratio <= 2.0;
  return out;
}

}  // namespace fockcut
