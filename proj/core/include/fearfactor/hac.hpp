#pragma once

#include <Eigen/Dense>
#include <span>

namespace fearfactor::cross_section {

/// Bartlett-weighted long-run covariance of the rows of `u` (already centered):
///   S = G_0 + sum_{j=1..lags} (1 - j/(lags+1)) (G_j + G_j'),  G_j = (1/T) sum_t u_t u_{t-j}'.
Eigen::MatrixXd newey_west_long_run(const Eigen::MatrixXd& u, int lags);

/// HAC variance of the sample mean of `series`: long-run variance of the demeaned
/// series divided by T. With lags = 0 this is (1/T^2) sum (x_t - mean)^2.
/// Throws std::invalid_argument unless 0 <= lags < series.size().
double newey_west_variance(std::span<const double> series, int lags);

struct HacRegression {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;    // Newey-West sandwich covariance of coef
    Eigen::VectorXd t_stat;
    Eigen::VectorXd residuals;
    double r2 = 0.0;
};

/// OLS of y on x (include the constant yourself) with Newey-West standard errors.
HacRegression ols_newey_west(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int lags);

/// Errors-in-variables inflation 1 + lambda' cov^{-1} lambda.
/// Throws std::domain_error if cov is not positive definite.
double shanken_multiplier(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& factor_cov);

}  // namespace fearfactor::cross_section
