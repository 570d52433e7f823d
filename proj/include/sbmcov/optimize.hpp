#pragma once

#include <cmath>
#include <functional>

namespace sbmcov {

struct Maximum {
  double x = 0.0;
  double value = 0.0;
};

/// Maximizes f on (0, 1): a 99-point grid picks the bracket, golden-section
/// search refines it to `tol` in x. Assumes f is unimodal near the best
/// grid point.
template <class F>
Maximum maximize_unit_interval(F&& f, double tol = 1e-10) {
  constexpr int grid = 99;
  int best = 1;
  double best_val = f(0.01);
  for (int i = 2; i <= grid; ++i) {
    const double v = f(i / 100.0);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  // Open interval: keep strictly away from the endpoints.
  constexpr double edge = 1e-12;
  double lo = best == 1 ? edge : (best - 1) / 100.0;
  double hi = best == grid ? 1.0 - edge : (best + 1) / 100.0;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    }
  }
  Maximum m;
  m.x = 0.5 * (lo + hi);
  m.value = f(m.x);
  if (best_val > m.value) {
    m.x = best / 100.0;
    m.value = best_val;
  }
  return m;
}

}  // namespace sbmcov
