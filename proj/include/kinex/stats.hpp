#pragma once

#include <Eigen/Core>

namespace kinex {

struct MeanStderr {
  double mean = 0.0;
  double stderr = 0.0;
};

/// Sample mean and standard error of the mean (0 for a single sample).
MeanStderr mean_stderr(const Eigen::Ref<const Eigen::ArrayXd>& x);

/// Compensated (Neumaier) sum.
double compensated_sum(const Eigen::Ref<const Eigen::ArrayXd>& x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y ~ intercept + slope x.
LinearFit least_squares(const Eigen::Ref<const Eigen::ArrayXd>& x,
                        const Eigen::Ref<const Eigen::ArrayXd>& y);

/// Upper tail P(X >= stat) of a chi-square law with `dof` degrees of freedom.
double chi_square_sf(double stat, int dof);

/// Pearson statistic of observed counts against equal expected counts.
double uniformity_chi_square(const Eigen::Ref<const Eigen::ArrayXd>& counts);

}  // namespace kinex
