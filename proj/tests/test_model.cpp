#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fockcut/errors.hpp"
#include "fockcut/model.hpp"
#include "support.hpp"

#include <cmath>

using namespace fockcut;
using namespace fockcut::testing;

TEST_CASE("dispersion and form factors at symmetric points") {
  CHECK(example_dispersion({0, 0, 0}) == 0.0);
  CHECK(example_dispersion({kPi, kPi, kPi}) == doctest::Approx(6.0));
  const auto p = example_params(1, 1, {1, 2, 3}, {1, 2, 3});
  CHECK(unit_form_factor(p, 1, {0, 0, 0}) == doctest::Approx(6.0));
  CHECK(unit_form_factor(p, 2, {kPi, kPi, kPi}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(unit_form_factor(p, 3, {0, 0, 0}), InvalidArgument);
}

TEST_CASE("example family rejects non-positive couplings") {
  CHECK_THROWS_AS(example_family(example_params(0.0, 1.0)), InvalidArgument);
  CHECK_THROWS_AS(example_family(example_params(1.0, -1.0)), InvalidArgument);
  CHECK_THROWS_AS(example_family(example_params(NAN, 1.0)), InvalidArgument);
}

TEST_CASE("two-particle dispersion is separable and symmetric") {
  const auto m = example_family(example_params(0.1, 0.2));
  const Point3 p{0.3, -1.2, 2.0}, q{-0.7, 0.4, 3.0};
  CHECK(m.w2(p, q) == doctest::Approx(example_dispersion(p) + example_dispersion(q)));
  CHECK(m.w2(p, q) == doctest::Approx(m.w2(q, p)));
  const auto ext = min_max_w2(m, TorusGrid::build(4, GridMode::base, false));
  CHECK(ext.m == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ext.M == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(model_scale(ext.m, ext.M) == doctest::Approx(12.0));
  CHECK(model_scale(0.1, 0.2) == 1.0);
}

TEST_CASE("second form factor is orthogonal to periodic functions on double covers") {
  const auto m = example_family(example_params(0.1, 0.2, {1, 1, 1}, {1, -2, 0.5}));
  const auto dc = check_orthogonality(m, TorusGrid::build(8, GridMode::double_cover, true),
                                      periodic_test_functions());
  CHECK(dc.max_relative <= 1e-12);
  const auto base = check_orthogonality(m, TorusGrid::build(8, GridMode::base, true),
                                        periodic_test_functions());
  CHECK(base.max_relative > 1e-3);
}

TEST_CASE("coupling thresholds match the Monte-Carlo oracle") {
  const auto grid = TorusGrid::build(16, GridMode::double_cover, true);
  const auto params = example_params(1.0, 1.0);
  const auto t1 = mu_thresholds(params, 1, grid);
  const auto t2 = mu_thresholds(params, 2, grid);
  CHECK(t1.lower == doctest::Approx(kMu1Lower).epsilon(2e-3));
  CHECK(t1.upper == doctest::Approx(kMu1Upper).epsilon(2e-3));
  CHECK(t2.lower == doctest::Approx(kMu2Lower).epsilon(2e-3));
  CHECK(t2.upper == doctest::Approx(kMu2Upper).epsilon(2e-3));
  CHECK(t1.lower < t1.upper);
  CHECK(t2.lower < t2.upper);
}

TEST_CASE("oracle reproduces the frozen singular integral") {
  const auto e = mc_form_factor_integral(1, {1, 1, 1}, 0.0, 200000, 11);
  CHECK(1.0 / e.value == doctest::Approx(kMu1Lower).epsilon(2e-2));
}

TEST_CASE("quadratic bounds hold near the dispersion minimum") {
  const auto q = quadratic_bounds_check(example_family(example_params(0.1, 0.2)));
  CHECK(q.holds);
  CHECK(q.hessian_min_eigenvalue > 0.0);
  CHECK(q.C1 > 0.0);
}
