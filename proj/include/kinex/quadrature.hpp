#pragma once

#include <Eigen/Core>

namespace kinex {

/// Gauss-Legendre rule on [0, 1].
struct QuadratureRule {
  Eigen::ArrayXd nodes;
  Eigen::ArrayXd weights;
};

/// n-point rule built by Golub-Welsch; exact for polynomials of degree 2n-1.
const QuadratureRule& gauss_legendre(int n);

}  // namespace kinex
