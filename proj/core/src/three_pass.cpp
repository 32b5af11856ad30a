#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "fearfactor/cross_section.hpp"

namespace fearfactor::cross_section {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

int eigenvalue_ratio_count(const std::vector<double>& eigenvalues, int kmax) {
    if (eigenvalues.size() < 2 || kmax < 1) return 1;
    const double floor = 1e-12 * eigenvalues.front();
    const int top = std::min<int>(kmax, static_cast<int>(eigenvalues.size()) - 1);
    int best = 1;
    double best_ratio = -1.0;
    for (int k = 1; k <= top; ++k) {
        const double hi = eigenvalues[static_cast<std::size_t>(k - 1)];
        const double lo = eigenvalues[static_cast<std::size_t>(k)];
        if (hi <= floor) break;
        if (lo <= floor) return k;  // nothing left beyond k factors
        if (hi / lo > best_ratio) {
            best_ratio = hi / lo;
            best = k;
        }
    }
    return best;
}

namespace {

struct PassThree {
    double lambda = 0.0;
    double t = kMissing;
    double wald = 0.0;
    double p_value = 1.0;
};

// v: T x p latent factors with v'v/T = I and zero column means.
PassThree price_observable(const VectorXd& g, const MatrixXd& v, const VectorXd& gamma, int lags) {
    const auto T = static_cast<double>(v.rows());
    const Index p = v.cols();
    const VectorXd gd = g.array() - g.mean();
    const VectorXd eta = v.transpose() * gd / T;
    const VectorXd z = gd - v * eta;
    const VectorXd psi = v * eta + z.cwiseProduct(v * gamma);

    PassThree out;
    out.lambda = eta.dot(gamma);
    const double var = newey_west_variance(std::span<const double>(psi.data(), static_cast<std::size_t>(psi.size())), lags);
    if (var > 0.0) out.t = out.lambda / std::sqrt(var);

    const MatrixXd u = v.array().colwise() * z.array();
    const MatrixXd omega = newey_west_long_run(u, lags);
    Eigen::LLT<MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-14)) {
        // Observable lies in the latent span: the residual vanishes.
        out.wald = eta.squaredNorm() > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        out.p_value = eta.squaredNorm() > 0.0 ? 0.0 : 1.0;
        return out;
    }
    out.wald = T * eta.dot(llt.solve(eta));
    const boost::math::chi_squared dist(static_cast<double>(p));
    out.p_value = std::clamp(boost::math::cdf(boost::math::complement(dist, std::max(out.wald, 0.0))), 0.0, 1.0);
    return out;
}

}  // namespace

ThreePassResult three_pass(const DatedMatrix& assets, const DatedSeries& observable, const DatedSeries& market,
                           const ThreePassOptions& options) {
    std::map<int, double> g_by_month, m_by_month;
    for (std::size_t t = 0; t < observable.size(); ++t)
        if (!is_missing(observable.values[t])) g_by_month[observable.dates[t].month_index()] = observable.values[t];
    for (std::size_t t = 0; t < market.size(); ++t)
        if (!is_missing(market.values[t])) m_by_month[market.dates[t].month_index()] = market.values[t];
    const bool has_market = market.size() > 0;

    std::vector<Index> rows;
    std::vector<double> g, mk;
    for (std::size_t t = 0; t < assets.dates.size(); ++t) {
        const auto tr = static_cast<Index>(t);
        const int key = assets.dates[t].month_index();
        auto gi = g_by_month.find(key);
        if (gi == g_by_month.end() || assets.values.row(tr).hasNaN()) continue;
        auto mi = m_by_month.find(key);
        if (has_market && mi == m_by_month.end()) continue;
        rows.push_back(tr);
        g.push_back(gi->second);
        if (has_market) mk.push_back(mi->second);
    }
    const auto T = static_cast<Index>(rows.size());
    const Index N = assets.values.cols();
    if (T <= options.nw_lags || T < 3)
        throw InsufficientOverlap("three_pass: only " + std::to_string(T) + " complete months");
    MatrixXd r(T, N);
    for (Index t = 0; t < T; ++t) r.row(t) = assets.values.row(rows[static_cast<std::size_t>(t)]);
    const VectorXd rbar = r.colwise().mean().transpose();
    const MatrixXd rd = r.rowwise() - rbar.transpose();
    const double scale = static_cast<double>(N) * static_cast<double>(T);

    // Principal directions in time (columns of xi, unit norm), via the smaller Gram matrix.
    std::vector<double> mu;
    MatrixXd xi;
    if (N <= T) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(rd.transpose() * rd / scale);
        const VectorXd ev = es.eigenvalues().reverse();
        const MatrixXd vec = es.eigenvectors().rowwise().reverse();
        mu.assign(ev.data(), ev.data() + ev.size());
        xi = rd * vec;
        for (Index k = 0; k < xi.cols(); ++k) {
            const double nrm = xi.col(k).norm();
            if (nrm > 0.0) xi.col(k) /= nrm;
        }
    } else {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(rd * rd.transpose() / scale);
        const VectorXd ev = es.eigenvalues().reverse();
        mu.assign(ev.data(), ev.data() + ev.size());
        xi = es.eigenvectors().rowwise().reverse();
    }
    for (double& m : mu) m = std::max(m, 0.0);
    if (mu.empty() || mu.front() <= 0.0) throw std::invalid_argument("three_pass: test-asset returns have no variation");
    int rank = 0;
    for (double m : mu)
        if (m > 1e-12 * mu.front()) ++rank;

    int p;
    if (options.n_latent) {
        p = *options.n_latent;
    } else {
        const int kmax = std::min({options.max_latent, static_cast<int>(N) - 2, rank});
        p = eigenvalue_ratio_count(mu, std::max(kmax, 1));
    }
    if (p < 1) throw std::invalid_argument("three_pass: need at least one latent factor");
    if (p > rank)
        throw std::invalid_argument("three_pass: " + std::to_string(p) + " latent factors exceed the numerical rank " +
                                    std::to_string(rank));
    if (N < p + 2)
        throw std::invalid_argument("three_pass: need at least " + std::to_string(p + 2) + " test assets");

    const MatrixXd v = std::sqrt(static_cast<double>(T)) * xi.leftCols(p);  // T x p
    const MatrixXd beta = rd.transpose() * v / static_cast<double>(T);       // N x p
    const VectorXd gamma = beta.colPivHouseholderQr().solve(rbar);
    const VectorXd resid = rbar - beta * gamma;
    const double tss = (rbar.array() - rbar.mean()).square().sum();
    const double r2 = tss > 0.0 ? 1.0 - resid.squaredNorm() / tss : 1.0;

    ThreePassResult out;
    out.n_latent_factors = p;
    out.n_assets = static_cast<std::size_t>(N);
    out.n_months = static_cast<std::size_t>(T);
    out.latent_premia = gamma;
    out.eigenvalues = mu;
    out.adj_r2 = 1.0 - (1.0 - r2) * static_cast<double>(N - 1) / static_cast<double>(N - p - 1);

    const auto pg = price_observable(Eigen::Map<const VectorXd>(g.data(), T), v, gamma, options.nw_lags);
    out.lambda = pg.lambda;
    out.t_stat = pg.t;
    out.wald_stat = pg.wald;
    out.weak_factor_p = pg.p_value;
    if (has_market) {
        const auto pm = price_observable(Eigen::Map<const VectorXd>(mk.data(), T), v, gamma, options.nw_lags);
        out.lambda_market = pm.lambda;
        out.t_market = pm.t;
        out.market_weak_p = pm.p_value;
    }
    return out;
}

}  // namespace fearfactor::cross_section
