#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fearfactor/hac.hpp"
#include "fearfactor/rng.hpp"

using namespace fearfactor;
using namespace fearfactor::cross_section;

namespace {

/// Direct double loop: (1/T^2) sum_j w_j sum_t e_t e_{t-j}, both signs of j.
double brute_force(const std::vector<double>& x, int lags) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double acc = 0.0;
    for (int j = -lags; j <= lags; ++j) {
        const double w = 1.0 - std::abs(j) / static_cast<double>(lags + 1);
        for (std::size_t t = 0; t < n; ++t) {
            const long s = static_cast<long>(t) - j;
            if (s < 0 || s >= static_cast<long>(n)) continue;
            acc += w * (x[t] - mean) * (x[static_cast<std::size_t>(s)] - mean);
        }
    }
    return acc / (static_cast<double>(n) * static_cast<double>(n));
}

std::vector<double> ar1(std::size_t n, double rho, std::uint64_t stream) {
    CounterRng rng(13, stream);
    std::vector<double> x(n);
    double v = 0.0;
    for (auto& e : x) e = v = rho * v + rng.normal();
    return x;
}

}  // namespace

TEST(NeweyWest, ZeroLagsIsVarianceOfMean) {
    const std::vector<double> x{1.0, 2.0, 4.0, 7.0};
    const double mean = 3.5;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    EXPECT_NEAR(newey_west_variance(x, 0), ss / 16.0, 1e-15);
}

TEST(NeweyWest, MatchesBruteForceDoubleSum) {
    CounterRng rng(1, 1);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 20 + static_cast<std::size_t>(rng.uniform() * 200);
        const int lags = static_cast<int>(rng.uniform() * 15);
        const auto x = ar1(n, rng.uniform(-0.9, 0.9), 100 + static_cast<std::uint64_t>(rep));
        const double expected = brute_force(x, lags);
        EXPECT_NEAR(newey_west_variance(x, lags), expected, 1e-10 * std::max(1.0, std::abs(expected)));
    }
}

TEST(NeweyWest, PositiveAutocorrelationInflatesVariance) {
    const auto x = ar1(20000, 0.5, 7);
    const double naive = newey_west_variance(x, 0);
    const double hac = newey_west_variance(x, 40);
    EXPECT_GT(hac, naive);
    // Long-run to short-run ratio of an AR(1) is (1 + rho) / (1 - rho) = 3.
    EXPECT_NEAR(hac / naive, 3.0, 0.3);
}

TEST(NeweyWest, TimeReversalSymmetric) {
    auto x = ar1(300, 0.3, 8);
    const double forward = newey_west_variance(x, 12);
    std::reverse(x.begin(), x.end());
    EXPECT_NEAR(newey_west_variance(x, 12), forward, 1e-15 * std::max(1.0, forward) + 1e-18);
}

TEST(NeweyWest, LagsMustBeBelowLength) {
    const std::vector<double> x{1.0, 2.0, 3.0};
    EXPECT_THROW(newey_west_variance(x, 3), std::invalid_argument);
    EXPECT_THROW(newey_west_variance(x, -1), std::invalid_argument);
}

TEST(NeweyWest, LongRunMatrixMatchesScalarCase) {
    const auto x = ar1(200, 0.4, 9);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= 200.0;
    Eigen::MatrixXd u(200, 1);
    for (int t = 0; t < 200; ++t) u(t, 0) = x[static_cast<std::size_t>(t)] - mean;
    EXPECT_NEAR(newey_west_long_run(u, 5)(0, 0) / 200.0, newey_west_variance(x, 5), 1e-14);
}

TEST(OlsNeweyWest, InterceptOnlyMatchesMeanVariance) {
    const auto x = ar1(150, 0.2, 10);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(x.data(), 150);
    const auto r = ols_newey_west(Eigen::MatrixXd::Ones(150, 1), y, 6);
    EXPECT_NEAR(r.coef(0), y.mean(), 1e-12);
    EXPECT_NEAR(r.cov(0, 0), newey_west_variance(x, 6), 1e-12);
    EXPECT_NEAR(r.t_stat(0), y.mean() / std::sqrt(r.cov(0, 0)), 1e-9);
}

TEST(Shanken, ZeroPremiumIsOne) {
    EXPECT_EQ(shanken_multiplier(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2)), 1.0);
}

TEST(Shanken, SingleFactorHandArithmetic) {
    Eigen::VectorXd l(1);
    l << 0.1;
    Eigen::MatrixXd s(1, 1);
    s << 0.04;
    EXPECT_DOUBLE_EQ(shanken_multiplier(l, s), 1.25);
}

TEST(Shanken, DiagonalTwoFactorHandArithmetic) {
    Eigen::VectorXd l(2);
    l << 0.1, 0.2;
    Eigen::MatrixXd s = Eigen::Vector2d(0.04, 0.01).asDiagonal();
    EXPECT_DOUBLE_EQ(shanken_multiplier(l, s), 5.25);
}

TEST(Shanken, SingularCovarianceRejected) {
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 1.0, 1.0, 1.0;
    EXPECT_THROW(shanken_multiplier(Eigen::VectorXd::Ones(2), s), std::domain_error);
}
