#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace fearfactor {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class SingularDesign : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OlsFit {
    VectorXd coef;
    VectorXd residuals;
    double r2 = 0.0;      // centered R^2; meaningful when the design has a constant
    Eigen::Index rank = 0;
};

/// Least squares of y on the columns of x via column-pivoted QR.
/// Throws SingularDesign when x is numerically rank deficient.
OlsFit ols(const MatrixXd& x, const VectorXd& y);

/// Prepends a column of ones.
MatrixXd with_intercept(const MatrixXd& x);

/// Ratio of largest to smallest singular value.
double condition_number(const MatrixXd& x);

/// Sample covariance of the columns (denominator n - 1).
MatrixXd sample_covariance(const MatrixXd& x);

/// Pearson correlation; NaN if either side is constant.
double correlation(const VectorXd& a, const VectorXd& b);

}  // namespace fearfactor
