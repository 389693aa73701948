#include "fockcut/spectrum.hpp"

#include "fockcut/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fockcut {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

std::pair<double, double> model_extrema(const ModelFunctions& model) {
  if (model.separable()) return {2.0 * model.dispersion_min, 2.0 * model.dispersion_max};
  const auto ext = min_max_w2(model, TorusGrid::build(10, GridMode::base, false));
  return {ext.m, ext.M};
}

}  // namespace

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::H: return "H";
    case OperatorKind::H1: return "H1";
    case OperatorKind::H2: return "H2";
    case OperatorKind::fiber: return "h(p)";
  }
  return "?";
}

DiscretizedOperator DiscretizedOperator::assemble(OperatorKind kind, const ModelFunctions& model,
                                                  const TorusGrid& grid,
                                                  std::optional<Point3> fiber_point,
                                                  const OperatorLimits& limits) {
  DiscretizedOperator op;
  op.kind_ = kind;
  op.grid_ = std::make_shared<const TorusGrid>(grid);
  const std::size_t n = grid.size();
  const double sw = std::sqrt(grid.weight());
  op.v0_.resize(n);
  op.v1_.resize(n);
  op.v2_.resize(n);
  op.w1_nodes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = grid.node(i);
    op.v0_[i] = model.v0 ? sw * model.v0(s) : 0.0;
    op.v1_[i] = sw * model.v1(s);
    op.v2_[i] = sw * model.v2(s);
    op.w1_nodes_[i] = model.w1(s);
  }
  op.w0_ = model.w0;
  const auto [m, M] = model_extrema(model);
  op.scale_ = model_scale(m, M);

  if (kind == OperatorKind::fiber) {
    if (!fiber_point) throw InvalidArgument("fiber operator needs a point p");
    const Point3 p = *fiber_point;
    op.layout_ = {1, n, 0};
    op.w1_fiber_ = model.w1(p);
    op.w2_fiber_.resize(n);
    for (std::size_t i = 0; i < n; ++i) op.w2_fiber_[i] = model.w2(p, grid.node(i));
    op.pairs_ = std::make_shared<const SymPairIndex>(0);
    return op;
  }
  const std::size_t npairs = n * (n + 1) / 2;
  if (npairs > limits.max_pairs) {
    std::ostringstream os;
    os << "pair count " << npairs << " exceeds the cap " << limits.max_pairs
       << "; use a coarser grid or raise the cap for matrix-free work";
    throw ResourceError(os.str());
  }
  op.pairs_ = std::make_shared<const SymPairIndex>(n);
  op.w2_pairs_.resize(static_cast<Eigen::Index>(npairs));
  for (std::size_t q = 0; q < npairs; ++q) {
    op.w2_pairs_[q] = model.w2(grid.node(op.pairs_->first(q)), grid.node(op.pairs_->second(q)));
  }
  switch (kind) {
    case OperatorKind::H:
    case OperatorKind::H1: op.layout_ = {1, n, npairs}; break;
    case OperatorKind::H2: op.layout_ = {0, 0, npairs}; break;
    default: break;
  }
  return op;
}

Eigen::VectorXd DiscretizedOperator::b_apply(const Eigen::VectorXd& v,
                                             const Eigen::VectorXd& two) const {
  const auto& P = *pairs_;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P.nodes()));
  for (std::size_t q = 0; q < P.size(); ++q) {
    const auto a = P.first(q);
    const auto b = P.second(q);
    if (a == b) {
      y[a] += v[a] * two[q];
    } else {
      y[a] += kInvSqrt2 * v[b] * two[q];
      y[b] += kInvSqrt2 * v[a] * two[q];
    }
  }
  return y;
}

Eigen::VectorXd DiscretizedOperator::bt_apply(const Eigen::VectorXd& v,
                                              const Eigen::VectorXd& one) const {
  const auto& P = *pairs_;
  Eigen::VectorXd y(static_cast<Eigen::Index>(P.size()));
  for (std::size_t q = 0; q < P.size(); ++q) {
    const auto a = P.first(q);
    const auto b = P.second(q);
    y[q] = a == b ? v[a] * one[a] : kInvSqrt2 * (v[b] * one[a] + v[a] * one[b]);
  }
  return y;
}

Eigen::VectorXd DiscretizedOperator::annihilate(const Eigen::VectorXd& two) const {
  return b_apply(v1_, two);
}

Eigen::VectorXd DiscretizedOperator::create(const Eigen::VectorXd& one) const {
  return bt_apply(v1_, one);
}

Eigen::VectorXd DiscretizedOperator::potential(const Eigen::VectorXd& two) const {
  return 2.0 * bt_apply(v2_, b_apply(v2_, two));
}

void DiscretizedOperator::apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  const auto dim = static_cast<Eigen::Index>(dimension());
  if (x.size() != dim) throw InvalidArgument("vector length does not match the operator dimension");
  y.resize(dim);
  const auto n = static_cast<Eigen::Index>(layout_.one);
  const auto np = static_cast<Eigen::Index>(layout_.two);
  switch (kind_) {
    case OperatorKind::fiber: {
      const double x0 = x[0];
      const auto x1 = x.tail(n);
      y[0] = w1_fiber_ * x0 + kInvSqrt2 * v1_.dot(x1);
      const double c = v2_.dot(x1);
      y.tail(n) = kInvSqrt2 * v1_ * x0 + w2_fiber_.cwiseProduct(x1) - v2_ * c;
      return;
    }
    case OperatorKind::H2: {
      y = w2_pairs_.cwiseProduct(x) - potential(x);
      return;
    }
    case OperatorKind::H:
    case OperatorKind::H1: {
      const double x0 = x[0];
      const Eigen::VectorXd x1 = x.segment(1, n);
      const Eigen::VectorXd x2 = x.tail(np);
      y[0] = w0_ * x0 + v0_.dot(x1);
      y.segment(1, n) = v0_ * x0 + w1_nodes_.cwiseProduct(x1) + annihilate(x2);
      Eigen::VectorXd y2 = create(x1) + w2_pairs_.cwiseProduct(x2);
      if (kind_ == OperatorKind::H) y2 -= potential(x2);
      y.tail(np) = y2;
      return;
    }
  }
}

Eigen::VectorXd DiscretizedOperator::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y;
  apply(x, y);
  return y;
}

Eigen::MatrixXd DiscretizedOperator::dense() const {
  const auto dim = static_cast<Eigen::Index>(dimension());
  const auto n = static_cast<Eigen::Index>(layout_.one);
  const auto np = static_cast<Eigen::Index>(layout_.two);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  if (kind_ == OperatorKind::fiber) {
    A(0, 0) = w1_fiber_;
    A.block(1, 0, n, 1) = kInvSqrt2 * v1_;
    A.block(0, 1, 1, n) = kInvSqrt2 * v1_.transpose();
    A.block(1, 1, n, n) = Eigen::MatrixXd(w2_fiber_.asDiagonal()) - v2_ * v2_.transpose();
    return A;
  }
  const auto& P = *pairs_;
  auto bmat = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P.nodes()), np);
    for (std::size_t q = 0; q < P.size(); ++q) {
      const auto a = P.first(q);
      const auto b = P.second(q);
      if (a == b) {
        B(a, q) = v[a];
      } else {
        B(a, q) = kInvSqrt2 * v[b];
        B(b, q) = kInvSqrt2 * v[a];
      }
    }
    return B;
  };
  const Eigen::Index off2 = kind_ == OperatorKind::H2 ? 0 : 1 + n;
  Eigen::MatrixXd two = Eigen::MatrixXd(w2_pairs_.asDiagonal());
  if (kind_ != OperatorKind::H1) {
    const Eigen::MatrixXd B2 = bmat(v2_);
    two.noalias() -= 2.0 * B2.transpose() * B2;
  }
  A.block(off2, off2, np, np) = two;
  if (kind_ == OperatorKind::H2) return A;
  A(0, 0) = w0_;
  A.block(1, 0, n, 1) = v0_;
  A.block(0, 1, 1, n) = v0_.transpose();
  A.block(1, 1, n, n) = Eigen::MatrixXd(w1_nodes_.asDiagonal());
  const Eigen::MatrixXd B1 = bmat(v1_);
  A.block(1, off2, n, np) = B1;
  A.block(off2, 1, np, n) = B1.transpose();
  return A;
}

LinearOperator DiscretizedOperator::as_linear_operator() const {
  LinearOperator op;
  op.dimension = static_cast<Eigen::Index>(dimension());
  const DiscretizedOperator* self = this;
  op.apply = [self](const Eigen::VectorXd& x, Eigen::VectorXd& y) { self->apply(x, y); };
  return op;
}

EssentialSpectrum essential_spectrum(const FriedrichsFamily& family, const SweepOptions& sweep) {
  EssentialSpectrum es;
  es.m = family.m();
  es.M = family.M();
  std::vector<Interval> pieces{{es.m, es.M}};
  es.structure_matches = true;
  for (int alpha = 1; alpha <= 2; ++alpha) {
    auto& b = es.branches[alpha - 1];
    b = two_particle_branch(family, alpha, sweep);
    if (!b.empty) pieces.push_back({b.E_min, std::max(b.sup_root, b.E_min)});
    if (b.above_min) pieces.push_back({*b.above_min, *b.above_max});
    auto& label = es.channel_case[alpha - 1];
    switch (b.regime.regime) {
      case Regime::pos:
        label = "(i)";
        // Roots below the fiber band may exist above m; none may lie below m.
        es.structure_matches = es.structure_matches && (b.empty || b.E_min >= es.m - 1e-9 * family.scale());
        break;
      case Regime::mixed:
        label = "(ii)";
        es.structure_matches = es.structure_matches && !b.empty && b.reaches_m && b.E_min < es.m;
        break;
      case Regime::neg:
        label = "(iii)";
        es.structure_matches =
            es.structure_matches && !b.empty && !b.reaches_m && b.E_min <= b.E_max && b.E_max < es.m;
        break;
      case Regime::ambiguous:
        label = "undetermined";
        es.structure_matches = false;
        break;
    }
  }
  std::sort(pieces.begin(), pieces.end(), [](const Interval& a, const Interval& b) {
    return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
  });
  for (const auto& piece : pieces) {
    if (!es.intervals.empty() && piece.lo <= es.intervals.back().hi) {
      es.intervals.back().hi = std::max(es.intervals.back().hi, piece.hi);
    } else {
      es.intervals.push_back(piece);
    }
  }
  if (es.intervals.size() > 4) {
    throw InvariantViolation("essential spectrum has " + std::to_string(es.intervals.size()) +
                             " intervals; at most four are possible");
  }
  es.tau_ess = es.intervals.front().lo;
  return es;
}

double tau_ess(const EssentialSpectrum& essential) {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& iv : essential.intervals) t = std::min(t, iv.lo);
  return t;
}

std::vector<Interval> closure_minus(const Interval& base, const std::vector<Interval>& removed) {
  std::vector<Interval> sorted = removed;
  std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  double cur = base.lo;
  for (const auto& r : sorted) {
    if (r.hi < cur) continue;
    if (r.lo > base.hi) break;
    if (r.lo > cur) out.push_back({cur, r.lo});
    cur = std::max(cur, r.hi);
  }
  if (cur < base.hi) out.push_back({cur, base.hi});
  return out;
}

SigmaSet sigma_region(const EssentialSpectrum& es) {
  SigmaSet s;
  const double m = es.m;
  const double tau = tau_ess(es);
  s.intervals = closure_minus({tau - 1.0, m}, es.intervals);
  const auto& b1 = es.branches[0];
  const auto& b2 = es.branches[1];
  const Regime r1 = b1.regime.regime;
  const Regime r2 = b2.regime.regime;
  s.case_label = "UNCLASSIFIED";
  if (r1 == Regime::ambiguous || r2 == Regime::ambiguous) return s;

  // Order channels so that a NEG channel (if any) comes first, then MIXED.
  auto rank = [](Regime r) { return r == Regime::neg ? 0 : (r == Regime::mixed ? 1 : 2); };
  const BranchData& a = rank(r1) <= rank(r2) ? b1 : b2;
  const BranchData& b = rank(r1) <= rank(r2) ? b2 : b1;
  const Regime ra = a.regime.regime;
  const Regime rb = b.regime.regime;

  std::vector<Interval> expected;
  std::string label;
  const double emin_all =
      std::min(a.empty ? std::numeric_limits<double>::infinity() : a.E_min,
               b.empty ? std::numeric_limits<double>::infinity() : b.E_min);
  if (ra == Regime::pos && rb == Regime::pos) {
    label = "(i)";
    expected = {{m - 1.0, m}};
    s.E_min = s.E_max = m;
  } else if (ra == Regime::mixed && rb == Regime::mixed) {
    label = "(ii)";
    expected = {{emin_all - 1.0, emin_all}};
    s.E_min = emin_all;
    s.E_max = m;
  } else if (ra == Regime::mixed && rb == Regime::pos) {
    label = "(iii)";
    expected = {{a.E_min - 1.0, a.E_min}};
    s.E_min = a.E_min;
    s.E_max = m;
  } else if (ra == Regime::neg && rb == Regime::pos) {
    label = "(iv)";
    expected = {{a.E_min - 1.0, a.E_min}, {a.E_max, m}};
    s.E_min = a.E_min;
    s.E_max = a.E_max;
  } else if (ra == Regime::neg && rb == Regime::mixed) {
    if (a.E_max >= b.E_min) {
      label = "(v.a)";
      expected = {{emin_all - 1.0, emin_all}};
    } else {
      label = "(v.b)";
      expected = {{a.E_min - 1.0, a.E_min}, {a.E_max, b.E_min}};
    }
    s.E_min = emin_all;
    s.E_max = a.E_max;
  } else {
    label = "(vi)";
    expected = closure_minus({tau - 1.0, m}, {{a.E_min, a.E_max}, {b.E_min, b.E_max}});
    s.E_min = emin_all;
    s.E_max = std::max(a.E_max, b.E_max);
  }
  const double tol = 1e-9 * model_scale(es.m, es.M);
  bool same = expected.size() == s.intervals.size();
  for (std::size_t i = 0; same && i < expected.size(); ++i) {
    same = std::abs(expected[i].lo - s.intervals[i].lo) <= tol &&
           std::abs(expected[i].hi - s.intervals[i].hi) <= tol;
  }
  if (same) {
    s.case_label = label;
    s.classified = true;
  }
  return s;
}

std::array<std::optional<Interval>, 2> node_root_bands(const FriedrichsFamily& family, double eta) {
  std::array<std::optional<Interval>, 2> bands;
  const double cutoff = family.m() - eta;
  for (int alpha = 1; alpha <= 2; ++alpha) {
    if (alpha == 2 && family.channel_vanishes(2)) continue;
    auto& band = bands[alpha - 1];
    for (const auto& p : family.grid().nodes()) {
      const auto r = family.eigenvalue_below(alpha, p, Threshold::grid);
      if (!r.z || *r.z >= cutoff) continue;
      if (!band) {
        band = Interval{*r.z, *r.z};
      } else {
        band->lo = std::min(band->lo, *r.z);
        band->hi = std::max(band->hi, *r.z);
      }
    }
  }
  return bands;
}

namespace {

bool in_band(const std::optional<Interval>& band, double z, double eta) {
  return band && z >= band->lo - eta && z <= band->hi + eta;
}

EigenResult solve_operator(const DiscretizedOperator& op, double cutoff,
                           const DiscreteOptions& options, std::string& solver, bool& truncated) {
  if (op.dimension() <= options.limits.max_dense_dimension) {
    solver = "dense";
    truncated = false;
    return dense_eigenpairs(op.dense());
  }
  solver = "block-krylov";
  auto opts = options.solver;
  opts.scale = op.scale();
  auto r = lowest_eigenvalues(op.as_linear_operator(), options.iterative_count, cutoff, opts);
  truncated = !r.truncated_by_cutoff;
  return r;
}

}  // namespace

DiscreteSpectrumReport discrete_below_m(const ModelFunctions& model,
                                        const EssentialSpectrum& essential,
                                        const std::vector<TorusGrid>& grids,
                                        const DiscreteOptions& options) {
  DiscreteSpectrumReport rep;
  const double scale = model_scale(essential.m, essential.M);
  const double m = essential.m;
  rep.eta = options.eta_relative * scale;
  const auto sigma = sigma_region(essential);
  for (const auto& iv : sigma.intervals) {
    for (double e : {iv.lo, iv.hi}) {
      if (std::find(rep.sigma_edges.begin(), rep.sigma_edges.end(), e) == rep.sigma_edges.end()) {
        rep.sigma_edges.push_back(e);
      }
    }
  }
  bool regimes_ok = true;
  for (const auto& b : essential.branches) regimes_ok = regimes_ok && b.regime.regime != Regime::ambiguous;
  bool orthogonal = true;
  if (!grids.empty()) {
    const auto ortho = check_orthogonality(model, grids.back(), periodic_test_functions());
    orthogonal = ortho.max_relative <= 1e-10;
  }
  rep.in_hypothesis = regimes_ok && orthogonal;
  if (!regimes_ok) rep.hypothesis_note = "a channel regime is ambiguous";
  if (!orthogonal) rep.hypothesis_note += std::string(rep.hypothesis_note.empty() ? "" : "; ") +
                                          "form factor not orthogonal to periodic functions on this grid";

  for (const auto& grid : grids) {
    DiscreteLevel lvl;
    lvl.n = grid.n_per_axis();
    const auto op = DiscretizedOperator::assemble(OperatorKind::H, model, grid, std::nullopt, options.limits);
    lvl.dimension = op.dimension();
    const FriedrichsFamily family(model, grid);
    lvl.bands = node_root_bands(family, rep.eta);
    const auto eig = solve_operator(op, m - rep.eta, options, lvl.solver, lvl.truncated);
    for (Eigen::Index j = 0; j < eig.values.size(); ++j) {
      const double z = eig.values(j);
      if (z >= m - rep.eta) continue;
      if (in_band(lvl.bands[0], z, rep.eta) || in_band(lvl.bands[1], z, rep.eta)) {
        ++lvl.excluded_below_m;
        continue;
      }
      lvl.values.push_back(z);
      lvl.residuals.push_back(eig.residuals[static_cast<std::size_t>(j)]);
    }
    lvl.min_edge_distance = std::numeric_limits<double>::infinity();
    for (double z : lvl.values)
      for (double e : rep.sigma_edges) lvl.min_edge_distance = std::min(lvl.min_edge_distance, std::abs(z - e));
    rep.levels.push_back(std::move(lvl));
  }
  const double move_tol = options.stability_relative * scale;
  for (std::size_t k = 0; k < rep.levels.size(); ++k) {
    auto& lvl = rep.levels[k];
    const DiscreteLevel* other =
        k + 1 < rep.levels.size() ? &rep.levels[k + 1] : (k > 0 ? &rep.levels[k - 1] : nullptr);
    for (double z : lvl.values) {
      bool ok = other != nullptr;
      if (other) {
        ok = std::any_of(other->values.begin(), other->values.end(),
                         [&](double y) { return std::abs(y - z) <= move_tol; });
      }
      lvl.stable.push_back(ok);
    }
  }
  rep.count_stable = !rep.levels.empty();
  rep.edges_non_accumulating = !rep.levels.empty();
  for (std::size_t k = 1; k < rep.levels.size(); ++k) {
    rep.count_stable = rep.count_stable && rep.levels[k].values.size() == rep.levels[0].values.size();
    const double prev = rep.levels[k - 1].min_edge_distance;
    const double cur = rep.levels[k].min_edge_distance;
    if (std::isfinite(prev) && cur < 0.9 * prev) rep.edges_non_accumulating = false;
  }
  return rep;
}

EmbeddingReport verify_block_embedding(const ModelFunctions& model, const TorusGrid& grid,
                               const DiscreteOptions& options) {
  EmbeddingReport rep;
  rep.mode = to_string(grid.mode());
  const auto H = DiscretizedOperator::assemble(OperatorKind::H, model, grid, std::nullopt, options.limits);
  const auto H1 = DiscretizedOperator::assemble(OperatorKind::H1, model, grid, std::nullopt, options.limits);
  const auto H2 = DiscretizedOperator::assemble(OperatorKind::H2, model, grid, std::nullopt, options.limits);
  const FriedrichsFamily family(model, grid);
  const double m = family.m();
  rep.eta = options.eta_relative * family.scale();
  const auto bands = node_root_bands(family, rep.eta);
  const auto n = static_cast<Eigen::Index>(H.layout().one);
  const auto np = static_cast<Eigen::Index>(H.layout().two);

  std::string solver;
  bool truncated = false;
  const auto e2 = solve_operator(H2, m - rep.eta, options, solver, truncated);
  for (Eigen::Index j = 0; j < e2.values.size(); ++j) {
    const double z = e2.values(j);
    if (z >= m - rep.eta) continue;
    EmbeddingCheck c;
    c.z = z;
    c.discrete = !in_band(bands[1], z, rep.eta);
    const Eigen::VectorXd g = e2.vectors.col(j).normalized();
    Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(H.dimension()));
    full.tail(np) = g;
    c.residual = (H.apply(full) - z * full).norm();
    c.annihilation_norm = H.annihilate(g).norm();
    c.potential_norm = H.potential(g).norm();
    c.passed = c.residual <= 1e-9 && c.annihilation_norm <= 1e-11;
    if (c.discrete) rep.all_passed = rep.all_passed && c.passed;
    rep.two_channel.push_back(c);
  }

  const auto e1 = solve_operator(H1, m - rep.eta, options, solver, truncated);
  for (Eigen::Index j = 0; j < e1.values.size(); ++j) {
    const double z = e1.values(j);
    if (z >= m - rep.eta) continue;
    EmbeddingCheck c;
    c.z = z;
    c.discrete = !in_band(bands[0], z, rep.eta);
    const Eigen::VectorXd x = e1.vectors.col(j);
    const Eigen::VectorXd x1 = x.segment(1, n);
    const Eigen::VectorXd rebuilt = -H.create(x1).cwiseQuotient(
        (H.pair_energies().array() - z).matrix());
    c.reconstruction_mismatch = (rebuilt - x.tail(np)).norm();
    Eigen::VectorXd f(x.size());
    f << x(0), x1, rebuilt;
    f.normalize();
    c.potential_norm = H.potential(f.tail(np)).norm();
    c.residual = (H.apply(f) - z * f).norm();
    c.annihilation_norm = H.annihilate(f.tail(np)).norm();
    c.passed = c.residual <= 1e-9 && c.potential_norm <= 1e-11;
    if (c.discrete) rep.all_passed = rep.all_passed && c.passed;
    rep.one_channel.push_back(c);
  }
  return rep;
}

}  // namespace fockcut
