#pragma once

#include <Eigen/Core>

#include "kinex/coefficients.hpp"

namespace kinex {

/// Closed-form solution of
///   g' = -a g + b h,   h' = (c g - d h) / (N - 1)
/// with g(0) = g0, h(0) = h0. Distinct roots give
/// g(t) = c1 e^{lambda1 t} + c2 e^{lambda2 t}; (near-)repeated roots use
/// g(t) = e^{lambda t} (c1 + c2 t).
struct MomentPrediction {
  double g0 = 0.0;
  double h0 = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  int n = 2;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  bool repeated_root = false;

  Eigen::Matrix2d generator() const;
  /// (g(t), h(t)).
  Eigen::Vector2d state(double t) const;
  double g(double t) const { return state(t)[0]; }
  double h(double t) const { return state(t)[1]; }
  /// Largest relative mismatch between central differences (step `step`)
  /// and the right-hand side of both equations at time t.
  double ode_residual(double t, double step = 1e-6) const;
};

/// Roots (lambda1 >= lambda2) of x^2 + (a + d/(N-1)) x + (a d - b c)/(N-1).
Eigen::Vector2d characteristic_roots(double a, double b, double c, double d, int n);

MomentPrediction second_moment_solution(double a, double b, double c, double d, int n, double g0,
                                        double h0);
MomentPrediction second_moment_solution(const ModelDiagnostics& diag, int n, double g0, double h0);

/// e^{-gamma t} E[M_0^p]; diag must have been computed for (n, p).
double theorem1_envelope(const ModelDiagnostics& diag, int n, double p, double em0p, double t);

/// g0 + (2 m b_p / a_p)^p, a uniform-in-time bound on E[(V_t^1)^p].
/// Throws DegenerateModel when a_p is not positive.
double moment_propagation_bound(const ModelDiagnostics& diag, double p, double m, double g0);

/// 2 u0 e^{-a t} + 2c/a + 4 b^2 / a^2. Throws InvalidRate unless a > 0 and
/// b, c, u0 >= 0.
double gronwall_envelope(double a, double b, double c, double u0, double t);

/// a + b/(N-1).
double contraction_rate(const ModelDiagnostics& diag, int n);

}  // namespace kinex
