#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace fockcut::detail {

struct SearchResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

// Compass search: deterministic, derivative free, tolerant of +inf values
// (treated as "undefined here").
template <class F>
SearchResult pattern_search(F&& f, std::vector<double> x, double step, double min_step,
                            int max_evaluations = 4000) {
  SearchResult r;
  r.x = x;
  r.value = f(x);
  r.evaluations = 1;
  const std::size_t dim = x.size();
  while (step >= min_step && r.evaluations < max_evaluations) {
    bool improved = false;
    for (std::size_t i = 0; i < dim && !improved; ++i) {
      for (double sign : {1.0, -1.0}) {
        std::vector<double> y = r.x;
        y[i] += sign * step;
        const double v = f(y);
        ++r.evaluations;
        if (v < r.value) {
          r.value = v;
          r.x = std::move(y);
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return r;
}

}  // namespace fockcut::detail
