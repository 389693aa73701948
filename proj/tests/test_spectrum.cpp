#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fockcut/eigensolver.hpp"
#include "fockcut/errors.hpp"
#include "fockcut/spectrum.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace fockcut;
using namespace fockcut::testing;

namespace {

ModelFunctions small_model() {
  return example_family(example_params(kMu1Lower, kMu2Lower, {1, 0.5, 2}, {1, 1, -1}, -0.5, 0.1));
}

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = gauss(rng);
  return x;
}

BranchData branch(Regime r, double lo = 0.0, double hi = 0.0) {
  BranchData b;
  b.regime.regime = r;
  b.empty = r == Regime::pos;
  b.E_min = lo;
  b.E_max = hi;
  return b;
}

EssentialSpectrum synthetic(const BranchData& b1, const BranchData& b2, std::vector<Interval> intervals) {
  EssentialSpectrum es;
  es.m = 0.0;
  es.M = 12.0;
  es.branches = {b1, b2};
  es.intervals = std::move(intervals);
  es.tau_ess = tau_ess(es);
  return es;
}

}  // namespace

TEST_CASE("sector dimensions") {
  const auto g = TorusGrid::build(2, GridMode::base, false);
  const auto m = small_model();
  CHECK(DiscretizedOperator::assemble(OperatorKind::H, m, g).dimension() == 1 + 8 + 36);
  CHECK(DiscretizedOperator::assemble(OperatorKind::H2, m, g).dimension() == 36);
  CHECK(DiscretizedOperator::assemble(OperatorKind::fiber, m, g, Point3{0, 0, 0}).dimension() == 9);
  CHECK_THROWS_AS(DiscretizedOperator::assemble(OperatorKind::fiber, m, g), InvalidArgument);
  OperatorLimits tight;
  tight.max_pairs = 10;
  CHECK_THROWS_AS(DiscretizedOperator::assemble(OperatorKind::H, m, g, std::nullopt, tight), ResourceError);
}

TEST_CASE("matrix-free action equals the dense matrix and is symmetric") {
  const auto g = TorusGrid::build(3, GridMode::base, true);
  const auto m = small_model();
  for (auto kind : {OperatorKind::H, OperatorKind::H1, OperatorKind::H2, OperatorKind::fiber}) {
    const auto op = DiscretizedOperator::assemble(kind, m, g, Point3{0.3, -0.2, 1.0});
    const auto A = op.dense();
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const auto x = random_vector(A.cols(), 3);
    CHECK((op.apply(x) - A * x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(op.apply(Eigen::VectorXd::Zero(A.cols() + 1)), InvalidArgument);
  }
}

TEST_CASE("creation is the adjoint of annihilation") {
  const auto g = TorusGrid::build(3, GridMode::base, false);
  const auto op = DiscretizedOperator::assemble(OperatorKind::H, small_model(), g);
  const auto x1 = random_vector(static_cast<Eigen::Index>(op.layout().one), 5);
  const auto x2 = random_vector(static_cast<Eigen::Index>(op.layout().two), 6);
  CHECK(op.create(x1).dot(x2) == doctest::Approx(x1.dot(op.annihilate(x2))).epsilon(1e-13));
  // The potential is positive semidefinite.
  CHECK(x2.dot(op.potential(x2)) >= 0.0);
}

TEST_CASE("orthonormal coordinates reproduce the two-particle quadratic form") {
  // <f, w2 f> on the grid against the weighted double sum of the table.
  const auto g = TorusGrid::build(2, GridMode::base, true);
  const auto m = small_model();
  const auto op = DiscretizedOperator::assemble(OperatorKind::H1, m, g);
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd f(n, n);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss;
  double direct = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) f(i, j) = f(j, i) = gauss(rng);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) direct += g.weight() * g.weight() * m.w2(g.node(i), g.node(j)) * f(i, j) * f(i, j);
  const auto x = sym_embed(g, op.pairs(), f);
  CHECK(x.dot(op.pair_energies().cwiseProduct(x)) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("block Krylov agrees with dense eigenvalues") {
  const auto op = DiscretizedOperator::assemble(OperatorKind::H, small_model(), TorusGrid::build(3, GridMode::base, false));
  const auto dense = dense_eigenpairs(op.dense());
  EigenSolverOptions opts;
  opts.scale = op.scale();
  const auto it = lowest_eigenvalues(op.as_linear_operator(), 4, std::numeric_limits<double>::infinity(), opts);
  REQUIRE(it.values.size() == 4);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(it.values[i] == doctest::Approx(dense.values[i]).epsilon(1e-9));
  const auto cut = lowest_eigenvalues(op.as_linear_operator(), 4, dense.values[1] + 1e-6, opts);
  CHECK(cut.truncated_by_cutoff);
  CHECK(cut.values.size() == 2);
}

TEST_CASE("closure minus removed intervals") {
  const auto a = closure_minus({0, 10}, {{2, 3}, {5, 6}});
  REQUIRE(a.size() == 3);
  CHECK(a[0].hi == 2);
  CHECK(a[1].lo == 3);
  CHECK(a[2].lo == 6);
  CHECK(closure_minus({0, 10}, {{-1, 11}}).empty());
  const auto b = closure_minus({0, 10}, {{5, 6}, {1, 5.5}});
  REQUIRE(b.size() == 2);
  CHECK(b[0].hi == 1);
  CHECK(b[1].lo == 6);
}

TEST_CASE("sigma region labels") {
  SUBCASE("(i)") {
    const auto s = sigma_region(synthetic(branch(Regime::pos), branch(Regime::pos), {{0, 12}}));
    CHECK(s.case_label == "(i)");
    CHECK(s.intervals.size() == 1);
  }
  SUBCASE("(ii)") {
    const auto s = sigma_region(synthetic(branch(Regime::mixed, -2, 0), branch(Regime::mixed, -1, 0), {{-2, 12}}));
    CHECK(s.case_label == "(ii)");
    CHECK(s.E_min == -2);
  }
  SUBCASE("(iii)") {
    const auto s = sigma_region(synthetic(branch(Regime::pos), branch(Regime::mixed, -1, 0), {{-1, 12}}));
    CHECK(s.case_label == "(iii)");
  }
  SUBCASE("(iv)") {
    const auto s = sigma_region(synthetic(branch(Regime::neg, -3, -2), branch(Regime::pos), {{-3, -2}, {0, 12}}));
    CHECK(s.case_label == "(iv)");
    CHECK(s.intervals.size() == 2);
  }
  SUBCASE("(v.a)") {
    const auto s = sigma_region(synthetic(branch(Regime::neg, -3, -1), branch(Regime::mixed, -2, 0), {{-3, 12}}));
    CHECK(s.case_label == "(v.a)");
  }
  SUBCASE("(v.b)") {
    const auto s = sigma_region(synthetic(branch(Regime::neg, -3, -2), branch(Regime::mixed, -1, 0), {{-3, -2}, {-1, 12}}));
    CHECK(s.case_label == "(v.b)");
  }
  SUBCASE("(vi)") {
    const auto s = sigma_region(synthetic(branch(Regime::neg, -5, -4), branch(Regime::neg, -3, -2), {{-5, -4}, {-3, -2}, {0, 12}}));
    CHECK(s.case_label == "(vi)");
    CHECK(s.intervals.size() == 3);
  }
  SUBCASE("ambiguous") {
    const auto s = sigma_region(synthetic(branch(Regime::ambiguous), branch(Regime::pos), {{0, 12}}));
    CHECK(s.case_label == "UNCLASSIFIED");
    CHECK_FALSE(s.classified);
  }
}

TEST_CASE("essential spectrum in the three regimes") {
  const auto grid = TorusGrid::build(16, GridMode::double_cover, true);
  SweepOptions sweep;
  sweep.per_axis = 5;
  for (int k = 0; k < 3; ++k) {
    const FriedrichsFamily family(example_family(regime_params(k)), grid);
    const auto es = essential_spectrum(family, sweep);
    INFO("regime " << k);
    CHECK(es.structure_matches);
    CHECK(es.intervals.size() <= 4);
    // Roots above the band may extend the top interval past M.
    CHECK(es.intervals.back().hi >= 12.0 - 1e-9);
    if (k == 0) {
      REQUIRE(es.intervals.size() == 1);
      CHECK(es.tau_ess == doctest::Approx(0.0).epsilon(1e-12));
    } else {
      CHECK(es.tau_ess < 0.0);
    }
    CHECK(sigma_region(es).classified);
  }
}

TEST_CASE("decoupled block eigenpairs embed into H") {
  const auto model = example_family(example_params(0.5 * kMu1Lower, 2.0 * kMu2Upper, {1, 1, 1}, {1, 1, 1}, -0.5, 0.01));
  const auto rep = verify_block_embedding(model, TorusGrid::build(2, GridMode::double_cover, false));
  CHECK(rep.all_passed);
  CHECK_FALSE(rep.two_channel.empty());
  for (const auto& c : rep.two_channel) {
    if (!c.discrete) continue;
    CHECK(c.residual < 1e-9);
    CHECK(c.annihilation_norm < 1e-11);
  }
}

TEST_CASE("discrete spectrum below m on refined grids") {
  const auto model = example_family(example_params(0.5 * kMu1Lower, 1.0, {1, 1, 1}, {0, 0, 0}, -0.5, 0.01));
  const FriedrichsFamily family(model, TorusGrid::build(16, GridMode::double_cover, true));
  const auto es = essential_spectrum(family);
  std::vector<TorusGrid> grids;
  for (int n : {2, 3}) grids.push_back(TorusGrid::build(n, GridMode::base, true));
  const auto rep = discrete_below_m(model, es, grids);
  REQUIRE(rep.levels.size() == 2);
  CHECK(rep.in_hypothesis);
  CHECK(rep.count_stable);
  for (const auto& l : rep.levels) {
    for (double z : l.values) CHECK(z < es.m);
    for (double r : l.residuals) CHECK(r < 1e-8);
  }
}
