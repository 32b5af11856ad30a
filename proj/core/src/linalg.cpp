#include "fearfactor/linalg.hpp"

#include <cmath>
#include <limits>

namespace fearfactor {

OlsFit ols(const MatrixXd& x, const VectorXd& y) {
    if (x.rows() != y.size()) throw std::invalid_argument("ols: row mismatch");
    if (x.rows() < x.cols()) throw SingularDesign("ols: fewer observations than regressors");
    Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
    // Relative threshold on the R diagonal; a regressor that is constant next to the
    // intercept leaves a diagonal at rounding level.
    qr.setThreshold(1e-10);
    OlsFit fit;
    fit.rank = qr.rank();
    if (fit.rank < x.cols())
        throw SingularDesign("ols: design rank " + std::to_string(fit.rank) + " < " + std::to_string(x.cols()) +
                             " regressors");
    fit.coef = qr.solve(y);
    fit.residuals = y - x * fit.coef;
    const double mean = y.mean();
    const double sst = (y.array() - mean).square().sum();
    fit.r2 = sst > 0.0 ? 1.0 - fit.residuals.squaredNorm() / sst : 1.0;
    return fit;
}

MatrixXd with_intercept(const MatrixXd& x) {
    MatrixXd out(x.rows(), x.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(x.cols()) = x;
    return out;
}

double condition_number(const MatrixXd& x) {
    Eigen::JacobiSVD<MatrixXd> svd(x);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return std::numeric_limits<double>::infinity();
    const double lo = s(s.size() - 1);
    return lo > 0.0 ? s(0) / lo : std::numeric_limits<double>::infinity();
}

MatrixXd sample_covariance(const MatrixXd& x) {
    const MatrixXd centered = x.rowwise() - x.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

double correlation(const VectorXd& a, const VectorXd& b) {
    const VectorXd da = a.array() - a.mean();
    const VectorXd db = b.array() - b.mean();
    const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
    if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return da.dot(db) / den;
}

}  // namespace fearfactor
