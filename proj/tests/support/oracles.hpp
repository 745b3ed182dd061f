#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace kinex::testing {

/// Classical fourth-order Runge-Kutta for a scalar ODE u' = f(u).
inline std::vector<double> rk4(const std::function<double(double)>& f, double u0, double t_end,
                               double step) {
  const auto steps = static_cast<std::size_t>(std::llround(t_end / step));
  std::vector<double> u(steps + 1);
  u[0] = u0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double x = u[k];
    const double k1 = f(x);
    const double k2 = f(x + 0.5 * step * k1);
    const double k3 = f(x + 0.5 * step * k2);
    const double k4 = f(x + step * k3);
    u[k + 1] = x + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

/// RK4 for a linear 2x2 system x' = A x.
inline std::pair<double, double> rk4_linear2(double a11, double a12, double a21, double a22,
                                             double g0, double h0, double t_end, int steps) {
  const double dt = t_end / steps;
  double g = g0, h = h0;
  auto fg = [&](double x, double y) { return a11 * x + a12 * y; };
  auto fh = [&](double x, double y) { return a21 * x + a22 * y; };
  for (int s = 0; s < steps; ++s) {
    const double k1g = fg(g, h), k1h = fh(g, h);
    const double k2g = fg(g + 0.5 * dt * k1g, h + 0.5 * dt * k1h);
    const double k2h = fh(g + 0.5 * dt * k1g, h + 0.5 * dt * k1h);
    const double k3g = fg(g + 0.5 * dt * k2g, h + 0.5 * dt * k2h);
    const double k3h = fh(g + 0.5 * dt * k2g, h + 0.5 * dt * k2h);
    const double k4g = fg(g + dt * k3g, h + dt * k3h);
    const double k4h = fh(g + dt * k3g, h + dt * k3h);
    g += dt / 6.0 * (k1g + 2 * k2g + 2 * k3g + k4g);
    h += dt / 6.0 * (k1h + 2 * k2h + 2 * k3h + k4h);
  }
  return {g, h};
}

/// Squared W2 between two samples by minimal assignment over all bijections
/// of the lcm-replicated atoms (exact for small sizes).
inline double brute_force_w2(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t l = std::lcm(n, m);
  std::vector<double> ra, rb;
  for (std::size_t i = 0; i < l; ++i) {
    ra.push_back(a[i % n]);
    rb.push_back(b[i % m]);
  }
  std::vector<std::size_t> perm(l);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < l; ++i) cost += (ra[i] - rb[perm[i]]) * (ra[i] - rb[perm[i]]);
    best = std::min(best, cost / static_cast<double>(l));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace kinex::testing
