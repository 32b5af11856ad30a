#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fearfactor/implied_variance.hpp"
#include "fearfactor/rng.hpp"
#include "support.hpp"

using namespace fearfactor;
using namespace fearfactor::implied_variance;
using market_data::OptionChain;
using market_data::Right;

namespace {

std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> k;
    const int n = static_cast<int>(std::round((hi - lo) / step));
    for (int i = 0; i <= n; ++i) k.push_back(lo + i * step);
    return k;
}

VarianceObservation obs(const std::string& firm, Date d, double total) {
    VarianceObservation o;
    o.firm_id = firm;
    o.date = d;
    o.total = total;
    o.good = 0.4 * total;
    o.bad = 0.6 * total;
    return o;
}

}  // namespace

TEST(ComputeVariance, BlackScholesTwentyVol) {
    const auto chain = test::exact_bs_chain(100.0, 0.0, 0.20, 30, grid(50.0, 150.0, 0.1));
    const auto v = compute_variance(chain);
    EXPECT_GE(v.total, 0.0392);
    EXPECT_LE(v.total, 0.0408);
    const double oracle = test::integrated_variance(100.0, 0.0, 0.20, 30.0 / 365.0, 50.0, 150.0, chain.k0);
    EXPECT_NEAR(v.total / oracle, 1.0, 0.02);
    EXPECT_FALSE(v.one_sided);
}

TEST(ComputeVariance, ZeroPayoffZeroVariance) {
    OptionChain c = test::exact_bs_chain(100.0, 0.0, 0.2, 30, {90, 95, 100, 105, 110});
    for (auto& q : c.quotes) q.bid = q.ask = 0.0;
    c.forward = c.k0 = 100.0;
    const auto v = compute_variance(c);
    EXPECT_EQ(v.total, 0.0);
    EXPECT_EQ(v.good, 0.0);
    EXPECT_EQ(v.bad, 0.0);
}

TEST(ComputeVariance, HandComputedFourStrikeChain) {
    OptionChain c;
    c.underlying_id = "H";
    c.quote_date = Date(2020, 1, 2);
    c.expiry_date = c.quote_date + 73;  // T = 0.2
    c.risk_free_rate = 0.0;
    c.forward = 101.0;
    c.k0 = 100.0;
    c.quotes = {test::quote(90, Right::put, 1.0, 1.0, c.quote_date, c.expiry_date),
                test::quote(100, Right::put, 3.0, 3.0, c.quote_date, c.expiry_date),
                test::quote(100, Right::call, 5.0, 5.0, c.quote_date, c.expiry_date),
                test::quote(120, Right::call, 0.5, 0.5, c.quote_date, c.expiry_date)};
    const double t = 0.2;
    // dK: 10 (one-sided), 15 (centred), 20 (one-sided); Q(100) = 4.
    const double put = 10.0 / (90.0 * 90.0) * 1.0;
    const double atm = 15.0 / (100.0 * 100.0) * 4.0;
    const double call = 20.0 / (120.0 * 120.0) * 0.5;
    const double corr = (1.01 - 1.0) * (1.01 - 1.0) / t;
    const auto v = compute_variance(c);
    EXPECT_NEAR(v.total, 2.0 / t * (put + atm + call) - corr, 1e-14);
    EXPECT_NEAR(v.bad, 2.0 / t * (put + 0.5 * atm) - 0.5 * corr, 1e-14);
    EXPECT_NEAR(v.good, 2.0 / t * (call + 0.5 * atm) - 0.5 * corr, 1e-14);
    EXPECT_EQ(v.n_puts, 2);
    EXPECT_EQ(v.n_calls, 2);
}

TEST(ComputeVariance, PanelMeanAdditivityFromTableOne) {
    // Good and bad sample means in the reference table sum to the total mean.
    EXPECT_NEAR(0.067 + 0.120, 0.187, 1e-12);
}

TEST(ComputeVariance, AdditivityOnRandomChains) {
    CounterRng rng(5, 0);
    for (int rep = 0; rep < 2000; ++rep) {
        std::vector<double> ks;
        const int n = 1 + static_cast<int>(rng.uniform() * 12);
        double k = rng.uniform(50, 90);
        for (int i = 0; i < n; ++i) ks.push_back(k += rng.uniform(0.5, 5));
        const double sigma = rng.uniform(0.05, 1.0);
        auto c = test::exact_bs_chain(rng.uniform(60, 120), rng.uniform(0, 0.05), sigma, 23 + rep % 15, ks);
        const auto v = compute_variance(c);
        EXPECT_LE(std::abs(v.good + v.bad - v.total), 1e-12);
        EXPECT_TRUE(std::isfinite(v.total));
    }
}

TEST(ComputeVariance, OneSidedChainFlagged) {
    const auto c = test::exact_bs_chain(100.0, 0.0, 0.3, 30, {60, 70, 80, 90});
    const auto v = compute_variance(c);
    EXPECT_TRUE(v.one_sided);
    EXPECT_LE(std::abs(v.good + v.bad - v.total), 1e-12);
}

TEST(ComputeVariance, ScaleInvariance) {
    const auto ks = grid(60.0, 140.0, 2.5);
    const auto base = compute_variance(test::exact_bs_chain(100.0, 0.01, 0.35, 30, ks));
    for (double scale : {0.01, 0.37, 7.0, 250.0}) {
        std::vector<double> scaled;
        for (double k : ks) scaled.push_back(k * scale);
        const auto v = compute_variance(test::exact_bs_chain(100.0 * scale, 0.01, 0.35, 30, scaled));
        EXPECT_NEAR(v.total, base.total, 1e-9);
    }
}

TEST(ComputeVariance, RefinementShrinksError) {
    const double s = 100.0, sigma = 0.3, t = 30.0 / 365.0;
    const double oracle = test::integrated_variance(s, 0.0, sigma, t, 40.0, 160.0, 100.0);
    double last = std::numeric_limits<double>::infinity();
    for (double step : {10.0, 5.0, 2.5}) {
        const auto v = compute_variance(test::exact_bs_chain(s, 0.0, sigma, 30, grid(40.0, 160.0, step)));
        const double err = std::abs(v.total - oracle);
        EXPECT_LT(err, last);
        last = err;
    }
}

TEST(ComputeVariance, RemovingDeepestQuoteIsLocal) {
    const auto full = test::exact_bs_chain(100.0, 0.0, 0.4, 30, grid(50.0, 150.0, 5.0));
    const auto v = compute_variance(full);
    auto trimmed = full;
    const auto& deep = trimmed.quotes.front();
    const double t = full.maturity();
    const double weight = 2.0 / t * 5.0 / (deep.strike * deep.strike) * deep.mid();
    trimmed.quotes.erase(trimmed.quotes.begin());
    EXPECT_LE(std::abs(compute_variance(trimmed).total - v.total), weight + 1e-15);
}

TEST(BuildPanel, DenseTwoByTwo) {
    const Date d1(2020, 1, 2), d2(2020, 1, 3);
    const std::vector<VarianceObservation> os{obs("B", d1, 0.2), obs("A", d1, 0.1), obs("A", d2, 0.3),
                                              obs("B", d2, 0.4)};
    const auto p = build_panel(os);
    EXPECT_EQ(p.firms(), (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(p.dates(), (std::vector<Date>{d1, d2}));
    EXPECT_EQ(p.size(), 4u);
    EXPECT_EQ(p.duplicate_count(), 0u);
    const auto m = p.matrix(Measure::total);
    EXPECT_DOUBLE_EQ(m(0, 0), 0.1);
    EXPECT_DOUBLE_EQ(m(1, 1), 0.4);
}

TEST(BuildPanel, DuplicateLastWins) {
    const Date d(2020, 1, 2);
    const std::vector<VarianceObservation> os{obs("A", d, 0.1), obs("A", d, 0.5)};
    const auto p = build_panel(os);
    EXPECT_EQ(p.size(), 1u);
    EXPECT_EQ(p.duplicate_count(), 1u);
    EXPECT_EQ(p.warnings().size(), 1u);
    EXPECT_DOUBLE_EQ(p.find(0, 0)->total, 0.5);
}

TEST(BuildPanel, NegativeTotalMaskedByDefault) {
    auto o = obs("A", Date(2020, 1, 2), -0.01);
    o.negative_total = true;
    const auto p = build_panel(std::vector<VarianceObservation>{o});
    EXPECT_TRUE(std::isnan(p.matrix(Measure::total)(0, 0)));
    EXPECT_DOUBLE_EQ(p.matrix(Measure::total, true)(0, 0), -0.01);
}

TEST(PanelSummary, ConstantIdenticalSeries) {
    std::vector<VarianceObservation> os;
    for (int d = 0; d < 5; ++d)
        for (const char* f : {"A", "B", "C"}) os.push_back(obs(f, Date(2020, 1, 6) + d, 0.2));
    const auto s = panel_summary(build_panel(os));
    EXPECT_DOUBLE_EQ(s.total.mean, 0.2);
    EXPECT_NEAR(s.total.std, 0.0, 1e-15);
    EXPECT_NEAR(s.total.avg_pairwise_cov, 0.0, 1e-15);
}

TEST(PanelSummary, HandPanel) {
    const Date d(2020, 1, 6);
    const std::vector<VarianceObservation> os{
        obs("A", d, 1), obs("A", d + 1, 2), obs("A", d + 2, 3), obs("A", d + 3, 4),
        obs("B", d, 2), obs("B", d + 1, 2), obs("B", d + 2, 4), obs("B", d + 3, 4),
        obs("C", d, 3), obs("C", d + 2, 5), obs("C", d + 3, 7),
    };
    const auto s = panel_summary(build_panel(os));
    EXPECT_NEAR(s.total.mean, 3.25, 1e-14);
    EXPECT_NEAR(s.total.std, (2.0 + std::sqrt(3.0)) / 4.0, 1e-14);
    EXPECT_NEAR(s.total.avg_pairwise_cov, 19.0 / 9.0, 1e-14);
    EXPECT_NEAR(s.good.mean, 0.4 * 3.25, 1e-14);
}

TEST(PanelSummary, SingleFirmHasNoCovariance) {
    const auto s = panel_summary(build_panel(std::vector<VarianceObservation>{obs("A", Date(2020, 1, 6), 0.1)}));
    EXPECT_TRUE(std::isnan(s.total.avg_pairwise_cov));
    EXPECT_THROW(panel_summary(VariancePanel{}), std::invalid_argument);
}

TEST(PanelCsv, RoundTrip) {
    test::TempDir dir;
    const auto chain = test::exact_bs_chain(100.0, 0.01, 0.25, 30, grid(80, 120, 5));
    auto o = compute_variance(chain);
    auto o2 = o;
    o2.firm_id = "ZZ";
    const auto p = build_panel(std::vector<VarianceObservation>{o, o2});
    {
        std::ofstream out(dir / "p.csv");
        write_panel_csv(out, p);
    }
    const auto back = read_panel_csv(dir / "p.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.find(0, 0)->total, o.total);
    EXPECT_EQ(back.find(0, 0)->k0, o.k0);
    EXPECT_EQ(back.firms(), p.firms());
}
