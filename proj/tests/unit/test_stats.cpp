#include <Eigen/Core>
#include <cmath>

#include "doctest.h"
#include "kinex/stats.hpp"

TEST_CASE("mean and standard error") {
  Eigen::ArrayXd x(4);
  x << 1, 2, 3, 4;
  const auto ms = kinex::mean_stderr(x);
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.stderr == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  Eigen::ArrayXd one(1);
  one << 3;
  CHECK(kinex::mean_stderr(one).stderr == 0.0);
}

TEST_CASE("compensated sum recovers small terms") {
  Eigen::ArrayXd x(4);
  x << 1e16, 1.0, -1e16, 1.0;
  CHECK(kinex::compensated_sum(x) == 2.0);
}

TEST_CASE("least squares line") {
  Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(5, 0, 4);
  Eigen::ArrayXd y = 3.0 - 0.5 * t;
  const auto fit = kinex::least_squares(t, y);
  CHECK(fit.slope == doctest::Approx(-0.5));
  CHECK(fit.intercept == doctest::Approx(3.0));
}

TEST_CASE("chi-square tail") {
  CHECK(kinex::chi_square_sf(0.0, 3) == doctest::Approx(1.0));
  // P(chi2_2 >= x) = exp(-x/2)
  CHECK(kinex::chi_square_sf(3.0, 2) == doctest::Approx(std::exp(-1.5)));
  Eigen::ArrayXd counts(3);
  counts << 10, 10, 10;
  CHECK(kinex::uniformity_chi_square(counts) == 0.0);
}
