#include "kinex/stats.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>

namespace kinex {

MeanStderr mean_stderr(const Eigen::Ref<const Eigen::ArrayXd>& x) {
  MeanStderr out;
  const auto n = x.size();
  if (n == 0) return out;
  out.mean = x.mean();
  if (n > 1) out.stderr = std::sqrt((x - out.mean).square().sum() / (n - 1) / n);
  return out;
}

double compensated_sum(const Eigen::Ref<const Eigen::ArrayXd>& x) {
  double sum = 0.0, carry = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x[i];
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

LinearFit least_squares(const Eigen::Ref<const Eigen::ArrayXd>& x,
                        const Eigen::Ref<const Eigen::ArrayXd>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("least_squares needs at least two paired points");
  }
  Eigen::MatrixXd design(x.size(), 2);
  design.col(0).setOnes();
  design.col(1) = x.matrix();
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(y.matrix());
  return {coef[1], coef[0]};
}

double chi_square_sf(double stat, int dof) {
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, std::max(stat, 0.0)));
}

double uniformity_chi_square(const Eigen::Ref<const Eigen::ArrayXd>& counts) {
  const double expected = counts.sum() / static_cast<double>(counts.size());
  return (counts - expected).square().sum() / expected;
}

}  // namespace kinex
