#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fearfactor/exposures.hpp"
#include "fearfactor/rng.hpp"
#include "fearfactor/synth.hpp"
#include "support.hpp"

using namespace fearfactor;
using namespace fearfactor::exposures;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t stream, double sd = 1.0) {
    CounterRng rng(21, stream);
    std::vector<double> v(n);
    for (auto& x : v) x = sd * rng.normal();
    return v;
}

/// Solves the normal equations with plain Gaussian elimination and partial pivoting.
std::vector<double> normal_equations(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
    const std::size_t k = x[0].size();
    std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t t = 0; t < x.size(); ++t)
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = 0; j < k; ++j) a[i][j] += x[t][i] * x[t][j];
            a[i][k] += x[t][i] * y[t];
        }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < k; ++r)
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        std::swap(a[c], a[p]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t j = c; j <= k; ++j) a[r][j] -= f * a[c][j];
        }
    }
    std::vector<double> b(k);
    for (std::size_t i = 0; i < k; ++i) b[i] = a[i][k] / a[i][i];
    return b;
}

struct Fixture {
    std::vector<Date> grid = synth::weekday_calendar(Date(2019, 1, 1), 400);
    NamedSeries factor{"CF_minus", {grid, normals(400, 1)}};
    NamedSeries control{"VIX", {grid, normals(400, 2)}};
};

}  // namespace

TEST(EstimateBetas, ExactLinearModel) {
    Fixture fx;
    StockReturns s{"S1", {fx.grid, {}}};
    for (double f : fx.factor.series.values) s.returns.values.push_back(2.0 * f + 0.001);
    const auto run = estimate_betas(std::vector<StockReturns>{s}, fx.factor, fx.control);
    ASSERT_FALSE(run.estimates.empty());
    for (const auto& e : run.estimates) {
        EXPECT_NEAR(e.beta_cf, 2.0, 1e-10);
        EXPECT_NEAR(e.intercept, 0.001, 1e-10);
        EXPECT_NEAR(e.beta_control, 0.0, 1e-10);
        EXPECT_GE(e.n_obs, 200);
        EXPECT_LE(e.n_obs, 252);
        EXPECT_EQ(e.factor_name, "CF_minus");
        EXPECT_EQ(e.control_name, "VIX");
    }
}

TEST(EstimateBetas, NoisyRecoveryWithinThreeSe) {
    Fixture fx;
    const auto noise = normals(400, 3, 0.5);
    StockReturns s{"S1", {fx.grid, {}}};
    for (std::size_t t = 0; t < 400; ++t)
        s.returns.values.push_back(-0.5 * fx.factor.series.values[t] + 1.2 * fx.control.series.values[t] + noise[t]);
    const auto run = estimate_betas(std::vector<StockReturns>{s}, fx.factor, fx.control);
    ASSERT_FALSE(run.estimates.empty());
    // With unit-variance regressors the slope standard error is about sd / sqrt(n).
    for (const auto& e : run.estimates) {
        const double se = 0.5 / std::sqrt(static_cast<double>(e.n_obs));
        EXPECT_NEAR(e.beta_cf, -0.5, 3.5 * se);
        EXPECT_NEAR(e.beta_control, 1.2, 3.5 * se);
    }
}

TEST(EstimateBetas, ConstantReturnSkippedWithDiagnostic) {
    Fixture fx;
    StockReturns s{"FLAT", {fx.grid, std::vector<double>(400, 0.001)}};
    const auto run = estimate_betas(std::vector<StockReturns>{s}, fx.factor, std::nullopt);
    EXPECT_TRUE(run.estimates.empty());
    EXPECT_FALSE(run.diagnostics.empty());
}

TEST(EstimateBetas, ConstantRegressorSkipped) {
    Fixture fx;
    NamedSeries flat{"CF", {fx.grid, std::vector<double>(400, 1.0)}};
    StockReturns s{"S1", {fx.grid, normals(400, 4)}};
    const auto run = estimate_betas(std::vector<StockReturns>{s}, flat, std::nullopt);
    EXPECT_TRUE(run.estimates.empty());
    EXPECT_FALSE(run.diagnostics.empty());
}

TEST(EstimateBetas, MatchesBruteForceNormalEquations) {
    Fixture fx;
    StockReturns s{"S1", {fx.grid, normals(400, 5, 0.02)}};
    s.returns.values[390] = kMissing;
    const auto run = estimate_betas(std::vector<StockReturns>{s}, fx.factor, fx.control);
    ASSERT_FALSE(run.estimates.empty());
    const auto& e = run.estimates.back();
    std::size_t end = 0;
    while (fx.grid[end] != e.as_of_month) ++end;
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (std::size_t t = end + 1 - 252; t <= end; ++t) {
        if (is_missing(s.returns.values[t])) continue;
        x.push_back({1.0, fx.factor.series.values[t], fx.control.series.values[t]});
        y.push_back(s.returns.values[t]);
    }
    const auto b = normal_equations(x, y);
    EXPECT_EQ(e.n_obs, static_cast<int>(y.size()));
    EXPECT_NEAR(e.intercept, b[0], 1e-9);
    EXPECT_NEAR(e.beta_cf, b[1], 1e-9);
    EXPECT_NEAR(e.beta_control, b[2], 1e-9);
}

TEST(EstimateBetas, FactorScalingScalesBetaInversely) {
    Fixture fx;
    StockReturns s{"S1", {fx.grid, normals(400, 6, 0.02)}};
    const auto base = estimate_betas(std::vector<StockReturns>{s}, fx.factor, std::nullopt);
    for (double c : {0.5, 10.0}) {
        NamedSeries scaled = fx.factor;
        for (auto& v : scaled.series.values) v *= c;
        const auto run = estimate_betas(std::vector<StockReturns>{s}, scaled, std::nullopt);
        ASSERT_EQ(run.estimates.size(), base.estimates.size());
        for (std::size_t i = 0; i < run.estimates.size(); ++i)
            EXPECT_NEAR(run.estimates[i].beta_cf, base.estimates[i].beta_cf / c,
                        1e-12 * std::max(1.0, std::abs(base.estimates[i].beta_cf)));
    }
}

TEST(EstimateBetas, ObservationsOutsideWindowIgnored) {
    Fixture fx;
    StockReturns s{"S1", {fx.grid, normals(400, 7, 0.02)}};
    const auto base = estimate_betas(std::vector<StockReturns>{s}, fx.factor, std::nullopt);
    StockReturns changed = s;
    changed.returns.values[0] = 5.0;  // only inside windows ending within 252 days of the start
    const auto run = estimate_betas(std::vector<StockReturns>{changed}, fx.factor, std::nullopt);
    ASSERT_EQ(run.estimates.size(), base.estimates.size());
    for (std::size_t i = 0; i < run.estimates.size(); ++i) {
        std::size_t end = 0;
        while (fx.grid[end] != run.estimates[i].as_of_month) ++end;
        if (end >= 252) EXPECT_EQ(run.estimates[i].beta_cf, base.estimates[i].beta_cf);
    }
}

TEST(EstimateBetas, MinObsEnforced) {
    Fixture fx;
    StockReturns s{"S1", {fx.grid, normals(400, 8)}};
    for (std::size_t t = 0; t < 400; t += 3) s.returns.values[t] = kMissing;  // about 168 of 252 observed
    const auto run = estimate_betas(std::vector<StockReturns>{s}, fx.factor, std::nullopt);
    EXPECT_TRUE(run.estimates.empty());
}

TEST(GroupReturns, SplitsAndOrders) {
    std::vector<market_data::StockRecord> recs{{"B", Date(2020, 1, 2), 0.01, 10, 100, 1},
                                               {"A", Date(2020, 1, 3), 0.02, 10, 100, 1},
                                               {"A", Date(2020, 1, 2), 0.03, 10, 100, 1}};
    const auto g = group_returns(recs);
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g[0].stock_id, "A");
    EXPECT_EQ(g[0].returns.dates, (std::vector<Date>{Date(2020, 1, 2), Date(2020, 1, 3)}));
    EXPECT_EQ(g[0].returns.values, (std::vector<double>{0.03, 0.02}));
}

TEST(BetasCsv, RoundTrip) {
    test::TempDir dir;
    std::vector<ExposureEstimate> es{{"S1", Date(2020, 1, 31), 1.5, kMissing, 0.01, 250, "CF", "none"},
                                     {"S2", Date(2020, 1, 31), -0.5, 0.3, 0.0, 201, "CF_minus", "MF_minus"}};
    {
        std::ofstream out(dir / "b.csv");
        write_betas_csv(out, es);
    }
    const auto back = read_betas_csv(dir / "b.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_TRUE(is_missing(back[0].beta_control));
    EXPECT_EQ(back[1].beta_control, 0.3);
    EXPECT_EQ(back[1].control_name, "MF_minus");
    EXPECT_EQ(back[1].n_obs, 201);
}
