#include "kinex/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kinex/errors.hpp"

namespace kinex {

namespace {

constexpr double kRepeatedRootGap = 1e-8;

void require_n(int n) {
  if (n < 2) throw InvalidConfig("N must be at least 2");
}

}  // namespace

Eigen::Vector2d characteristic_roots(double a, double b, double c, double d, int n) {
  require_n(n);
  const double trace = a + d / (n - 1);
  const double det = (a * d - b * c) / (n - 1);
  const double disc = std::max(0.0, trace * trace - 4.0 * det);
  const double q = -0.5 * (trace + std::copysign(std::sqrt(disc), trace));
  const double r1 = q;
  const double r2 = q != 0.0 ? det / q : 0.0;
  return {std::max(r1, r2), std::min(r1, r2)};
}

Eigen::Matrix2d MomentPrediction::generator() const {
  Eigen::Matrix2d m;
  m << -a, b, c / (n - 1), -d / (n - 1);
  return m;
}

Eigen::Vector2d MomentPrediction::state(double t) const {
  const Eigen::Matrix2d gen = generator();
  const Eigen::Vector2d x0(g0, h0);
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  if (repeated_root) {
    const double lambda = 0.5 * (lambda1 + lambda2);
    return std::exp(lambda * t) * (x0 + t * ((gen - lambda * id) * x0));
  }
  const Eigen::Matrix2d expm =
      (std::exp(lambda1 * t) * (gen - lambda2 * id) - std::exp(lambda2 * t) * (gen - lambda1 * id)) /
      (lambda1 - lambda2);
  return expm * x0;
}

double MomentPrediction::ode_residual(double t, double step) const {
  const Eigen::Vector2d fd = (state(t + step) - state(t - step)) / (2.0 * step);
  const Eigen::Vector2d x = state(t);
  const Eigen::Matrix2d gen = generator();
  const Eigen::Vector2d rhs = gen * x;
  // norm-wise: rounding in the difference quotient scales with |x| / step
  const double scale = std::max(fd.lpNorm<Eigen::Infinity>(),
                                gen.cwiseAbs().rowwise().sum().maxCoeff() * x.lpNorm<Eigen::Infinity>());
  if (scale == 0.0) return 0.0;
  return (fd - rhs).lpNorm<Eigen::Infinity>() / scale;
}

MomentPrediction second_moment_solution(double a, double b, double c, double d, int n, double g0,
                                        double h0) {
  MomentPrediction pred;
  pred.g0 = g0;
  pred.h0 = h0;
  pred.a = a;
  pred.b = b;
  pred.c = c;
  pred.d = d;
  pred.n = n;
  const Eigen::Vector2d roots = characteristic_roots(a, b, c, d, n);
  pred.lambda1 = roots[0];
  pred.lambda2 = roots[1];
  pred.repeated_root = std::abs(pred.lambda1 - pred.lambda2) < kRepeatedRootGap;
  const Eigen::Matrix2d gen = pred.generator();
  const Eigen::Vector2d x0(g0, h0);
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  if (pred.repeated_root) {
    const double lambda = 0.5 * (pred.lambda1 + pred.lambda2);
    pred.c1 = g0;
    pred.c2 = ((gen - lambda * id) * x0)[0];
  } else {
    const double gap = pred.lambda1 - pred.lambda2;
    pred.c1 = ((gen - pred.lambda2 * id) * x0)[0] / gap;
    pred.c2 = -((gen - pred.lambda1 * id) * x0)[0] / gap;
  }
  return pred;
}

MomentPrediction second_moment_solution(const ModelDiagnostics& diag, int n, double g0, double h0) {
  return second_moment_solution(diag.a, diag.b, diag.c, diag.d, n, g0, h0);
}

double theorem1_envelope(const ModelDiagnostics& diag, int n, double p, double em0p, double t) {
  if (!(p > 0.0)) throw InvalidConfig("p must be positive");
  if (!(t >= 0.0)) throw InvalidConfig("t must be nonnegative");
  if (diag.n != n || diag.p != p) {
    throw InvalidConfig("diagnostics were computed for N=" + std::to_string(diag.n) +
                        ", p=" + std::to_string(diag.p));
  }
  if (p == 1.0) return em0p;
  return std::exp(-diag.gamma * t) * em0p;
}

double moment_propagation_bound(const ModelDiagnostics& diag, double p, double m, double g0) {
  if (diag.p != p) {
    throw InvalidConfig("diagnostics were computed for p=" + std::to_string(diag.p));
  }
  if (!(diag.a_p > 1e-12)) {
    throw DegenerateModel("a_p = " + std::to_string(diag.a_p) + " is not positive");
  }
  return g0 + std::pow(2.0 * m * diag.b_p / diag.a_p, p);
}

double gronwall_envelope(double a, double b, double c, double u0, double t) {
  if (!(a > 0.0)) throw InvalidRate("gronwall_envelope needs a > 0");
  if (b < 0.0 || c < 0.0 || u0 < 0.0) throw InvalidRate("gronwall_envelope needs b, c, u0 >= 0");
  return 2.0 * u0 * std::exp(-a * t) + 2.0 * c / a + 4.0 * b * b / (a * a);
}

double contraction_rate(const ModelDiagnostics& diag, int n) {
  require_n(n);
  return diag.a + diag.b / (n - 1);
}

}  // namespace kinex
