#pragma once

// Test-side oracles and shared model setups. Nothing here calls the
// quantities it is meant to check.

#include "fockcut/grid.hpp"
#include "fockcut/model.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace fockcut::testing {

// Frozen values from the Monte-Carlo oracle below (c = d = (1,1,1)).
inline constexpr double kMu1Lower = 0.0026023436;
inline constexpr double kMu1Upper = 0.0230480504;
inline constexpr double kMu2Lower = 0.0039664474;
inline constexpr double kMu2Upper = 0.0224438680;
// Mean of 1 / (sum of 1 - cos) over the torus (Watson's integral).
inline constexpr double kWatsonMean = 0.505462019717326;

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Integral over [-pi, pi]^3 of F(p) = mean over the eight half-period images
// of (form factor)^2, divided by (sum of 1 - cos p_i) + shift. With
// shift = 0 the integrand has a point singularity at the origin: the unit
// ball is sampled radially (density 1 / (4 pi r^2)), the rest uniformly with
// rejection. alpha = 1: sum coef_i cos p_i; alpha = 2: sum coef_i cos(p_i / 2).
inline McEstimate mc_form_factor_integral(int alpha, const std::array<double, 3>& coef, double shift,
                                          std::uint64_t samples, std::uint64_t seed) {
  const double pi = 3.14159265358979323846;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto integrand = [&](double x, double y, double z) {
    const double eps = (1.0 - std::cos(x)) + (1.0 - std::cos(y)) + (1.0 - std::cos(z)) + shift;
    double num = 0.0;
    if (alpha == 1) {
      const double v = coef[0] * std::cos(x) + coef[1] * std::cos(y) + coef[2] * std::cos(z);
      num = v * v;
    } else {
      // cos((t + 2 pi) / 2) = -cos(t / 2): the images flip signs per axis.
      const double a = coef[0] * std::cos(0.5 * x), b = coef[1] * std::cos(0.5 * y),
                   c = coef[2] * std::cos(0.5 * z);
      for (int s = 0; s < 8; ++s) {
        const double v = ((s & 1) ? -a : a) + ((s & 2) ? -b : b) + ((s & 4) ? -c : c);
        num += v * v;
      }
      num /= 8.0;
    }
    return num / eps;
  };
  auto accumulate = [](double x, double& sum, double& sum2) {
    sum += x;
    sum2 += x * x;
  };
  const bool singular = shift == 0.0;
  double s_ball = 0.0, s2_ball = 0.0, s_out = 0.0, s2_out = 0.0;
  const double cube = 8.0 * pi * pi * pi;
  for (std::uint64_t i = 0; i < samples; ++i) {
    if (singular) {
      double gx = gauss(rng), gy = gauss(rng), gz = gauss(rng);
      const double n = std::sqrt(gx * gx + gy * gy + gz * gz);
      const double r = unit(rng);
      const double x = r * gx / n, y = r * gy / n, z = r * gz / n;
      accumulate(integrand(x, y, z) * 4.0 * pi * r * r, s_ball, s2_ball);
    }
    const double x = pi * (2.0 * unit(rng) - 1.0), y = pi * (2.0 * unit(rng) - 1.0),
                 z = pi * (2.0 * unit(rng) - 1.0);
    const bool inside = singular && x * x + y * y + z * z < 1.0;
    accumulate(inside ? 0.0 : integrand(x, y, z) * cube, s_out, s2_out);
  }
  const double n = static_cast<double>(samples);
  auto var = [n](double s, double s2) { return std::max(0.0, s2 / n - (s / n) * (s / n)) / n; };
  McEstimate e;
  e.value = s_out / n + (singular ? s_ball / n : 0.0);
  e.std_error = std::sqrt(var(s_out, s2_out) + (singular ? var(s_ball, s2_ball) : 0.0));
  return e;
}

inline ExampleParams example_params(double mu1, double mu2, Point3 c = {1, 1, 1}, Point3 d = {1, 1, 1},
                                    double w0 = 1.0, double v0_amplitude = 0.0) {
  ExampleParams p;
  p.mu1 = mu1;
  p.mu2 = mu2;
  p.c = c;
  p.d = d;
  p.w0 = w0;
  p.v0_amplitude = v0_amplitude;
  return p;
}

// Both channels at the same relative position against their thresholds.
inline ExampleParams regime_params(int which) {
  switch (which) {
    case 0: return example_params(0.5 * kMu1Lower, 0.5 * kMu2Lower);
    case 1: return example_params(0.5 * (kMu1Lower + kMu1Upper), 0.5 * (kMu2Lower + kMu2Upper));
    default: return example_params(2.0 * kMu1Upper, 2.0 * kMu2Upper);
  }
}

}  // namespace fockcut::testing
