// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// all ten pass.

#include "fockcut/eigensolver.hpp"
#include "fockcut/errors.hpp"
#include "fockcut/friedrichs.hpp"
#include "fockcut/model.hpp"
#include "fockcut/spectrum.hpp"
#include "fockcut/weinberg.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace fockcut;
using namespace fockcut::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const TorusGrid& quadrature() {
  static const TorusGrid g = TorusGrid::build(16, GridMode::double_cover, true);
  return g;
}

std::string fmt(double x, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << x;
  return os.str();
}

const char* regime_name(int which) { return which == 0 ? "POS" : (which == 1 ? "MIXED" : "NEG"); }

// 1. Coupling thresholds against the Monte-Carlo oracle; regime trichotomy.
Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  o.pass = true;
  std::ostringstream d;
  const auto params = example_params(1.0, 1.0);
  const auto fine = TorusGrid::build(32, GridMode::double_cover, true);
  std::array<CouplingThresholds, 2> th{};
  for (int alpha = 1; alpha <= 2; ++alpha) {
    th[alpha - 1] = mu_thresholds(params, alpha, fine);
    const auto sing = mc_form_factor_integral(alpha, {1, 1, 1}, 0.0, 10'000'000, 11 + alpha);
    const auto reg = mc_form_factor_integral(alpha, {1, 1, 1}, 6.0, 10'000'000, 23 + alpha);
    const double r0 = std::abs(th[alpha - 1].lower * sing.value - 1.0);
    const double r1 = std::abs(th[alpha - 1].upper * reg.value - 1.0);
    o.pass = o.pass && r0 <= 1e-3 && r1 <= 1e-3;
    d << "mu" << alpha << "=(" << fmt(th[alpha - 1].lower, 9) << ", " << fmt(th[alpha - 1].upper, 9)
      << ") mc rel " << fmt(r0, 2) << "/" << fmt(r1, 2) << "; ";
  }
  const double f[3][2] = {{0.5 * th[0].lower, 0.5 * th[1].lower},
                          {0.5 * (th[0].lower + th[0].upper), 0.5 * (th[1].lower + th[1].upper)},
                          {2.0 * th[0].upper, 2.0 * th[1].upper}};
  const Regime want[3] = {Regime::pos, Regime::mixed, Regime::neg};
  for (int k = 0; k < 3; ++k) {
    const auto model = example_family(example_params(f[k][0], f[k][1]));
    const FriedrichsFamily family(model, quadrature());
    for (int alpha = 1; alpha <= 2; ++alpha) {
      const auto r = classify_regime(family, alpha);
      o.pass = o.pass && r.regime == want[k];
      d << to_string(r.regime) << (alpha == 1 ? "/" : " ");
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.pass = o.pass && secs <= 120.0;
  d << "in " << fmt(secs, 3) << " s";
  o.detail = d.str();
  return o;
}

// 2. Interval structure per regime and stability under sweep refinement.
Outcome criterion2() {
  Outcome o;
  o.pass = true;
  std::ostringstream d;
  for (int k = 0; k < 3; ++k) {
    const auto model = example_family(regime_params(k));
    const FriedrichsFamily family(model, quadrature());
    SweepOptions coarse, fine;
    coarse.per_axis = 9;
    fine.per_axis = 13;
    const auto a = essential_spectrum(family, coarse);
    const auto b = essential_spectrum(family, fine);
    bool ok = a.intervals.size() <= 4 && a.structure_matches && b.structure_matches &&
              a.intervals.size() == b.intervals.size();
    double drift = 0.0;
    if (ok) {
      for (std::size_t i = 0; i < a.intervals.size(); ++i) {
        drift = std::max({drift, std::abs(a.intervals[i].lo - b.intervals[i].lo),
                          std::abs(a.intervals[i].hi - b.intervals[i].hi)});
      }
    }
    // Below-M shape per regime: [m, M] alone; [E_min, M]; [E_min, E_max] and [m, M].
    std::size_t below = 0;
    for (const auto& iv : a.intervals) below += iv.lo < a.M ? 1 : 0;
    ok = ok && drift <= 1e-3 && (k == 2 ? below >= 2 : below == 1);
    if (k == 1) ok = ok && a.intervals.front().lo < a.m && a.intervals.front().hi >= a.M;
    if (k == 2) ok = ok && a.intervals.front().hi < a.m;
    o.pass = o.pass && ok;
    d << regime_name(k) << ": " << a.intervals.size() << " intervals (" << below << " start below M), drift "
      << fmt(drift, 2) << (ok ? "" : ", mismatch") << "; ";
  }
  o.detail = d.str();
  return o;
}

// 3. No fiber carries more than three eigenvalues outside its band.
Outcome criterion3() {
  Outcome o;
  std::size_t worst = 0;
  for (int k = 0; k < 3; ++k) {
    const auto model = example_family(regime_params(k));
    const FriedrichsFamily family(model, quadrature());
    for (const auto& p : p_sweep(9)) worst = std::max(worst, family.roots_full_scan(p).count());
  }
  o.pass = worst <= 3;
  o.detail = "max roots per fiber " + std::to_string(worst) + " over 3 x " +
             std::to_string(p_sweep(9).size()) + " fibers";
  return o;
}

// 4. Cross term vanishes on double-cover grids; base-mode magnitude recorded.
Outcome criterion4() {
  Outcome o;
  double worst = 0.0, base_worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    const auto model = example_family(regime_params(k));
    const FriedrichsFamily dc(model, quadrature());
    const FriedrichsFamily base(model, TorusGrid::build(16, GridMode::base, true));
    for (const auto& p : p_sweep(5)) {
      for (double z : {dc.m() - 3.0, dc.m() - 0.5, dc.m() - 1e-3, dc.M() + 1e-3, dc.M() + 2.0}) {
        worst = std::max(worst, std::abs(dc.cross_term(p, z)) / dc.scale());
        base_worst = std::max(base_worst, std::abs(base.cross_term(p, z)) / base.scale());
      }
    }
  }
  o.pass = worst <= 1e-12;
  o.detail = "double cover max |cross|/scale " + fmt(worst, 3) + "; base mode (recorded) " +
             fmt(base_worst, 3);
  return o;
}

// 5. Dense and matrix-free iterative eigenvalues agree.
Outcome criterion5() {
  Outcome o;
  const auto model = example_family(example_params(kMu1Lower, kMu2Lower, {1, 1, 1}, {1, 1, 1}, -0.5, 0.01));
  double d2 = 0.0, d3 = 0.0;
  std::size_t dim2 = 0, dim3 = 0;
  for (int n : {2, 3}) {
    const auto op = DiscretizedOperator::assemble(OperatorKind::H, model, TorusGrid::build(n, GridMode::base, false));
    const auto dense = dense_eigenpairs(op.dense());
    EigenSolverOptions opts;
    opts.scale = op.scale();
    const int k = n == 2 ? 5 : 1;
    const auto it = lowest_eigenvalues(op.as_linear_operator(), k, std::numeric_limits<double>::infinity(), opts);
    double diff = it.values.size() == k ? 0.0 : std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < it.values.size(); ++i) diff = std::max(diff, std::abs(it.values[i] - dense.values[i]));
    (n == 2 ? d2 : d3) = diff;
    (n == 2 ? dim2 : dim3) = op.dimension();
  }
  o.pass = dim2 == 45 && dim3 == 406 && d2 <= 1e-9 && d3 <= 1e-8;
  o.detail = "dim " + std::to_string(dim2) + ": lowest-5 diff " + fmt(d2, 2) + "; dim " +
             std::to_string(dim3) + ": lowest diff " + fmt(d3, 2);
  return o;
}

// 6. Eigenpairs of the decoupled blocks embed into H.
Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const auto model = example_family(example_params(0.5 * kMu1Lower, 2.0 * kMu2Upper, {1, 1, 1}, {1, 1, 1}, -0.5, 0.01));
  const auto grid = TorusGrid::build(4, GridMode::double_cover, false);
  const auto rep = verify_block_embedding(model, grid);
  std::size_t n2 = 0, n1 = 0;
  double r2 = 0.0, a2 = 0.0, r1 = 0.0, p1 = 0.0;
  for (const auto& c : rep.two_channel) {
    if (!c.discrete) continue;
    ++n2;
    r2 = std::max(r2, c.residual);
    a2 = std::max(a2, c.annihilation_norm);
  }
  for (const auto& c : rep.one_channel) {
    if (!c.discrete) continue;
    ++n1;
    r1 = std::max(r1, c.residual);
    p1 = std::max(p1, c.potential_norm);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.pass = rep.all_passed && n2 > 0 && n1 > 0 && secs <= 600.0;
  o.detail = std::to_string(n2) + " two-particle pairs (res " + fmt(r2, 2) + ", |H12 g| " + fmt(a2, 2) +
             "), " + std::to_string(n1) + " one-particle pairs (res " + fmt(r1, 2) + ", |V f2| " +
             fmt(p1, 2) + ") in " + fmt(secs, 3) + " s";
  return o;
}

// 7. Finite discrete spectrum: count and edge distance stable under refinement.
Outcome criterion7() {
  Outcome o;
  const auto model = example_family(example_params(0.5 * kMu1Lower, 1.0, {1, 1, 1}, {0, 0, 0}, -0.5, 0.01));
  const FriedrichsFamily family(model, quadrature());
  const auto es = essential_spectrum(family);
  std::vector<TorusGrid> grids;
  for (int n : {2, 3, 4}) grids.push_back(TorusGrid::build(n, GridMode::base, true));
  const auto rep = discrete_below_m(model, es, grids);
  const auto sigma = sigma_region(es);
  std::ostringstream d;
  d << "sigma case " << sigma.case_label << "; counts";
  for (const auto& l : rep.levels) d << ' ' << l.values.size();
  d << "; edge distance";
  for (const auto& l : rep.levels) d << ' ' << fmt(l.min_edge_distance, 4);
  o.pass = rep.in_hypothesis && rep.count_stable && rep.edges_non_accumulating && sigma.classified &&
           !rep.levels.empty() && !rep.levels.front().values.empty();
  o.detail = d.str();
  return o;
}

// 8. Discrete eigenvectors are fixed points of W(z), selectively in z.
Outcome criterion8() {
  Outcome o;
  const auto model = example_family(example_params(0.5 * kMu1Lower, 1.0, {1, 1, 1}, {0, 0, 0}, -0.5, 0.01));
  const auto grid = TorusGrid::build(3, GridMode::base, false);
  const FriedrichsFamily family(model, grid);
  const auto H = DiscretizedOperator::assemble(OperatorKind::H, model, grid);
  const auto eig = dense_eigenpairs(H.dense());
  const double eta = 1e-6 * family.scale();
  const auto bands = node_root_bands(family, eta);
  std::size_t checked = 0;
  double worst = 0.0, worst_gain = std::numeric_limits<double>::infinity();
  o.pass = true;
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    const double z = eig.values[k];
    if (z >= family.m() - eta) continue;
    bool banded = false;
    for (const auto& b : bands) banded = banded || (b && z >= b->lo - eta && z <= b->hi + eta);
    if (banded) continue;
    ++checked;
    const auto at = WeinbergOperator::assemble(family, z).fixed_point_residual(eig.vectors.col(k));
    const auto off = WeinbergOperator::assemble(family, z + 1e-2 * family.scale())
                         .fixed_point_residual(eig.vectors.col(k));
    const double gain = off.best_residual() / std::max(at.best_residual(), 1e-300);
    worst = std::max(worst, at.best_residual());
    worst_gain = std::min(worst_gain, gain);
    o.pass = o.pass && at.best_residual() <= 1e-6 && gain >= 100.0;
  }
  o.pass = o.pass && checked > 0;
  o.detail = std::to_string(checked) + " eigenvalues, worst best-candidate residual " + fmt(worst, 2) +
             ", min perturbation gain " + fmt(worst_gain, 3);
  return o;
}

// 9. Rank-one blocks and continuity of W at the m and E_max edges.
Outcome criterion9() {
  Outcome o;
  const auto model = example_family(example_params(2.0 * kMu1Upper, 1.0, {1, 1, 1}, {0, 0, 0}, -0.5, 0.01));
  const auto grid = TorusGrid::build(3, GridMode::base, true);
  const FriedrichsFamily family(model, grid);
  double e_max = -std::numeric_limits<double>::infinity();
  std::vector<Point3> pts = grid.nodes();
  for (const auto& p : p_sweep(9)) pts.push_back(p);
  for (const auto& p : pts) {
    const auto r = family.eigenvalue_below(1, p, Threshold::grid);
    if (r.z) e_max = std::max(e_max, *r.z);
  }
  const double m = family.m();
  const auto W = WeinbergOperator::assemble(family, 0.5 * (e_max + m));
  int ranks[3] = {0, 0, 0};
  const std::pair<int, int> blocks[3] = {{0, 1}, {1, 0}, {2, 0}};
  for (int b = 0; b < 3; ++b) {
    const auto sv = singular_values(W.block(blocks[b].first, blocks[b].second), 8);
    for (double s : sv) ranks[b] += (!sv.empty() && sv.front() > 0.0 && s > 1e-12 * sv.front()) ? 1 : 0;
  }
  const auto top = edge_approach(family, m, -1.0);
  const auto bottom = edge_approach(family, e_max, 1.0);
  o.pass = ranks[0] == 1 && ranks[1] == 1 && ranks[2] == 1 && top.monotone && bottom.monotone;
  o.detail = "ranks " + std::to_string(ranks[0]) + "/" + std::to_string(ranks[1]) + "/" +
             std::to_string(ranks[2]) + "; |W(z_k)-W(m)| " + fmt(top.distance.front(), 3) + " -> " +
             fmt(top.distance.back(), 3) + "; |W(z_k)-W(E_max)| " + fmt(bottom.distance.front(), 3) +
             " -> " + fmt(bottom.distance.back(), 3) + " (E_max " + fmt(e_max, 6) + ")";
  return o;
}

// 10. Quadratic vanishing of the determinants at the branch extremes.
Outcome criterion10() {
  Outcome o;
  o.pass = true;
  std::ostringstream d;
  const Point3 zero{0, 0, 0};
  const Point3 corner{kPi, kPi, kPi};
  for (int k : {1, 2}) {
    const auto model = example_family(regime_params(k));
    const FriedrichsFamily family(model, quadrature());
    for (int alpha = 1; alpha <= 2; ++alpha) {
      const auto lo = family.eigenvalue_below(alpha, zero, Threshold::grid);
      if (!lo.z) {
        o.pass = false;
        continue;
      }
      const auto zp = fit_vanishing_order(family, alpha, zero, *lo.z, 0.5);
      o.pass = o.pass && std::abs(zp.order - 2.0) <= 0.1 && zp.hessian_min_eigenvalue > 1e-6;
      d << regime_name(k) << " a" << alpha << " min " << fmt(zp.order, 4) << " (hess "
        << fmt(zp.hessian_min_eigenvalue, 3) << ")";
      if (k == 2) {
        const auto hi = family.eigenvalue_below(alpha, corner, Threshold::grid);
        const auto zq = fit_vanishing_order(family, alpha, corner, *hi.z, 0.5);
        o.pass = o.pass && std::abs(zq.order - 2.0) <= 0.1;
        d << " max " << fmt(zq.order, 4);
      }
      d << "; ";
    }
  }
  o.detail = d.str();
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"regime trichotomy", criterion1},
      {"essential spectrum structure", criterion2},
      {"at most three fiber eigenvalues", criterion3},
      {"decoupling exactness", criterion4},
      {"dense vs iterative eigenvalues", criterion5},
      {"block eigenpair embedding", criterion6},
      {"finite discrete spectrum", criterion7},
      {"Weinberg fixed point", criterion8},
      {"compactness and continuity", criterion9},
      {"vanishing order", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria fail") << std::endl;
  return failed == 0 ? 0 : 1;
}
