#include "kinex/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <map>
#include <mutex>
#include <stdexcept>

namespace kinex {

namespace {

QuadratureRule build_rule(int n) {
  // Jacobi matrix of the Legendre recurrence on [-1, 1].
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  QuadratureRule rule;
  rule.nodes = (solver.eigenvalues().array() + 1.0) / 2.0;
  rule.weights = solver.eigenvectors().row(0).transpose().array().square();
  return rule;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

}  // namespace kinex
