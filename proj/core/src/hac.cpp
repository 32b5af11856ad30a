#include "fearfactor/hac.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fearfactor/linalg.hpp"

namespace fearfactor::cross_section {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd newey_west_long_run(const MatrixXd& u, int lags) {
    const Index n = u.rows();
    if (lags < 0) throw std::invalid_argument("newey_west: negative lag count");
    if (lags >= n) throw std::invalid_argument("newey_west: lags (" + std::to_string(lags) + ") must be below length (" +
                                               std::to_string(n) + ")");
    MatrixXd s = u.transpose() * u / static_cast<double>(n);
    for (int j = 1; j <= lags; ++j) {
        const double w = 1.0 - static_cast<double>(j) / (lags + 1.0);
        const MatrixXd g = u.bottomRows(n - j).transpose() * u.topRows(n - j) / static_cast<double>(n);
        s += w * (g + g.transpose());
    }
    return s;
}

double newey_west_variance(std::span<const double> series, int lags) {
    const auto n = static_cast<Index>(series.size());
    if (n == 0) throw std::invalid_argument("newey_west_variance: empty series");
    VectorXd e = Eigen::Map<const VectorXd>(series.data(), n);
    e.array() -= e.mean();
    return newey_west_long_run(e, lags)(0, 0) / static_cast<double>(n);
}

HacRegression ols_newey_west(const MatrixXd& x, const VectorXd& y, int lags) {
    const auto fit = ols(x, y);
    HacRegression out;
    out.coef = fit.coef;
    out.residuals = fit.residuals;
    out.r2 = fit.r2;
    const double n = static_cast<double>(x.rows());
    const MatrixXd scores = x.array().colwise() * fit.residuals.array();
    const MatrixXd s = newey_west_long_run(scores, lags);
    const MatrixXd bread = (x.transpose() * x / n).inverse();
    out.cov = bread * s * bread / n;
    out.t_stat = out.coef.array() / out.cov.diagonal().array().sqrt();
    return out;
}

double shanken_multiplier(const VectorXd& lambda, const MatrixXd& factor_cov) {
    if (factor_cov.rows() != lambda.size() || factor_cov.cols() != lambda.size())
        throw std::invalid_argument("shanken_multiplier: dimension mismatch");
    Eigen::LLT<MatrixXd> llt(factor_cov);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) throw std::domain_error("shanken_multiplier: factor covariance not positive definite");
    return 1.0 + lambda.dot(llt.solve(lambda));
}

}  // namespace fearfactor::cross_section
