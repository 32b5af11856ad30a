#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fearfactor/implied_variance.hpp"
#include "fearfactor/synth.hpp"
#include "support.hpp"

using namespace fearfactor;
using namespace fearfactor::synth;
using market_data::Right;

namespace {

MarketSpec small_spec(std::uint64_t seed = 3) {
    MarketSpec s;
    s.seed = seed;
    s.n_stocks = 30;
    s.n_option_firms = 3;
    s.n_days = 130;
    return s;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

}  // namespace

TEST(BlackScholes, MatchesReferenceFormula) {
    for (double k : {70.0, 95.0, 100.0, 130.0})
        for (double vol : {0.1, 0.4}) {
            EXPECT_NEAR(bs_call(100.0, k, 0.02, vol, 0.25), test::bs_call_price(100.0, k, 0.02, vol, 0.25), 1e-12);
            EXPECT_NEAR(bs_put(100.0, k, 0.02, vol, 0.25), test::bs_put_price(100.0, k, 0.02, vol, 0.25), 1e-12);
        }
}

TEST(BlackScholes, PutCallParity) {
    for (double k : {50.0, 100.0, 180.0}) {
        const double lhs = bs_call(100.0, k, 0.03, 0.3, 0.1) - bs_put(100.0, k, 0.03, 0.3, 0.1);
        EXPECT_NEAR(lhs, 100.0 - k * std::exp(-0.03 * 0.1), 1e-11);
    }
}

TEST(BlackScholes, DeltaIsSpotDerivative) {
    const double h = 1e-4;
    for (double k : {80.0, 100.0, 120.0}) {
        const double fd = (bs_call(100.0 + h, k, 0.01, 0.25, 0.08) - bs_call(100.0 - h, k, 0.01, 0.25, 0.08)) / (2 * h);
        EXPECT_NEAR(bs_call_delta(100.0, k, 0.01, 0.25, 0.08), fd, 1e-7);
    }
}

TEST(BsChain, QuotesWellFormed) {
    const auto c = bs_chain(100.0, 0.01, 0.3, 30, 60.0, 140.0, 5.0);
    EXPECT_EQ(c.quotes.size(), 2u * 17u);
    EXPECT_EQ(c.days_to_expiry(), 30);
    for (const auto& q : c.quotes) {
        EXPECT_GT(q.bid, 0.0);
        EXPECT_LE(q.bid, q.ask);
        const double mid = q.right == Right::call ? bs_call(100.0, q.strike, 0.01, 0.3, 30.0 / 365.0)
                                                  : bs_put(100.0, q.strike, 0.01, 0.3, 30.0 / 365.0);
        EXPECT_NEAR(q.mid(), mid, 1e-12);
        EXPECT_NEAR(0.5 * (q.ask - q.bid), std::min(std::max(0.01 * mid, 0.01), 0.5 * mid), 1e-12);
        ASSERT_TRUE(q.delta.has_value());
        EXPECT_EQ(q.right == Right::call, *q.delta > 0.0);
    }
}

TEST(BsChain, SurvivesFilterWithParityForward) {
    const auto c = bs_chain(100.0, 0.02, 0.25, 30, 50.0, 150.0, 2.5);
    const auto r = market_data::filter_chain(c);
    ASSERT_TRUE(std::holds_alternative<market_data::OptionChain>(r));
    const auto& f = std::get<market_data::OptionChain>(r);
    EXPECT_NEAR(f.forward, 100.0 * std::exp(0.02 * 30.0 / 365.0), 1e-9);
    EXPECT_EQ(f.k0, 100.0);
    const auto v = implied_variance::compute_variance(f);
    EXPECT_NEAR(v.total / (0.25 * 0.25), 1.0, 0.03);
}

TEST(BsChain, RejectsBadArguments) {
    EXPECT_THROW(bs_chain(100.0, 0.0, 0.0, 30, 80, 120, 5), std::invalid_argument);
    EXPECT_THROW(bs_chain(100.0, 0.0, 0.2, 30, 80, 120, 0), std::invalid_argument);
    EXPECT_THROW(bs_chain(100.0, 0.0, 0.2, 30, 100, 110, 5), std::invalid_argument);
    EXPECT_THROW(bs_chain(100.0, 0.0, 0.2, 0, 80, 120, 5), std::invalid_argument);
}

TEST(FactorPanel, NoiselessPanelIsExactProduct) {
    FactorPanelSpec spec;
    spec.n_firms = 10;
    spec.n_days = 50;
    spec.noise_sd = 0.0;
    spec.shares = {0.7, 0.3};
    const auto p = factor_panel(spec);
    EXPECT_EQ(p.panel.rows(), 50);
    EXPECT_EQ(p.panel.cols(), 10);
    EXPECT_LT((p.panel - p.true_factors * p.loadings.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(p.loadings(0, 0), std::sqrt(0.7), 1e-15);
    EXPECT_NEAR(p.loadings(1, 1), -std::sqrt(0.3), 1e-15);
}

TEST(FactorPanel, MaskRateAndDeterminism) {
    FactorPanelSpec spec;
    spec.n_firms = 50;
    spec.n_days = 400;
    spec.mask_rate = 0.2;
    spec.ar = 0.9;
    const auto a = factor_panel(spec);
    const auto b = factor_panel(spec);
    const double missing = static_cast<double>(a.panel.array().isNaN().count()) / static_cast<double>(a.panel.size());
    EXPECT_NEAR(missing, 0.2, 0.01);
    EXPECT_TRUE((a.panel.array().isNaN() == b.panel.array().isNaN()).all());
    EXPECT_EQ(a.panel.array().isNaN().select(0.0, a.panel).eval(), b.panel.array().isNaN().select(0.0, b.panel).eval());
    spec.shares = {0.5, 0.3, 0.2};
    EXPECT_THROW(factor_panel(spec), std::invalid_argument);
}

TEST(WeekdayCalendar, SkipsWeekends) {
    const auto days = weekday_calendar(Date(2020, 1, 4), 12);  // a Saturday
    ASSERT_EQ(days.size(), 12u);
    EXPECT_EQ(days.front(), Date(2020, 1, 6));
    for (std::size_t i = 0; i < days.size(); ++i) {
        EXPECT_NE(days[i].weekday(), 0u);
        EXPECT_NE(days[i].weekday(), 6u);
        if (i > 0) EXPECT_LT(days[i - 1], days[i]);
    }
}

TEST(PricedCrossSection, DeterministicForSeed) {
    const auto a = priced_cross_section(small_spec());
    const auto b = priced_cross_section(small_spec());
    ASSERT_EQ(a.stocks.size(), b.stocks.size());
    for (std::size_t i = 0; i < a.stocks.size(); i += 97) {
        EXPECT_EQ(a.stocks[i].excess_return, b.stocks[i].excess_return);
        EXPECT_EQ(a.stocks[i].market_cap, b.stocks[i].market_cap);
    }
    EXPECT_EQ(a.options, b.options);
    EXPECT_EQ(a.ff.values, b.ff.values);
    const auto c = priced_cross_section(small_spec(4));
    EXPECT_NE(a.stocks[5].excess_return, c.stocks[5].excess_return);
}

TEST(PricedCrossSection, ShapesAndTruth) {
    const auto spec = small_spec();
    const auto m = priced_cross_section(spec);
    EXPECT_EQ(m.days.size(), 130u);
    EXPECT_EQ(m.stocks.size(), 30u * 130u);
    EXPECT_EQ(m.rates.size(), 130u);
    EXPECT_EQ(m.fear.size(), 130u);
    for (std::size_t i = 0; i < m.truth.stock_ids.size(); ++i) {
        EXPECT_LE(std::abs(m.truth.fear_beta[i]), spec.beta_spread);
        EXPECT_NEAR(m.truth.expected_return[i],
                    m.truth.market_beta[i] * spec.market_premium + m.truth.fear_beta[i] * spec.premium_pct / 2100.0,
                    1e-15);
    }
    std::set<std::string> underlyings;
    for (const auto& q : m.options) {
        underlyings.insert(q.underlying_id);
        EXPECT_LT(q.quote_date, q.expiry_date);
        EXPECT_EQ(q.expiry_date.weekday(), 5u);
    }
    EXPECT_EQ(underlyings.size(), 4u);
    EXPECT_TRUE(underlyings.count(kIndexId));
    EXPECT_EQ(m.ff.names.back(), "rf");
    EXPECT_EQ(m.ff.dates.back(), m.days.back());
}

TEST(PricedCrossSection, ReturnsLoadOnFearShock) {
    auto spec = small_spec();
    spec.n_days = 1500;
    spec.n_option_firms = 0;
    const auto m = priced_cross_section(spec);
    const std::size_t T = m.days.size();
    for (std::size_t i = 0; i < 5; ++i) {
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            sxy += m.fear_shock[t] * m.stocks[i * T + t].excess_return;
            sxx += m.fear_shock[t] * m.fear_shock[t];
        }
        // Residual sd at most sqrt(idio^2 + (1.2 market)^2 + 5 style^2 / 12) = 0.0128 per day.
        const double se = 0.0128 / std::sqrt(sxx);
        EXPECT_NEAR(sxy / sxx, m.truth.fear_beta[i] * spec.fear_return_vol, 4.0 * se);
    }
}

TEST(PricedCrossSection, BenchmarkFactorsDriveReturns) {
    auto spec = small_spec();
    spec.n_option_firms = 0;
    spec.n_stocks = 6;
    spec.idio_vol = 0.0;
    spec.market_vol = 0.0;
    spec.fear_return_vol = 0.0;
    const auto m = priced_cross_section(spec);
    const auto T = static_cast<Eigen::Index>(m.days.size());
    // Returns of the first five stocks reveal the daily factor returns exactly.
    Eigen::MatrixXd r(T, 5), s(5, 5);
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index k = 0; k < 5; ++k) s(i, k) = m.truth.style_beta[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        for (Eigen::Index t = 0; t < T; ++t)
            r(t, i) = m.stocks[static_cast<std::size_t>(i * T + t)].excess_return - m.truth.expected_return[static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXd h = s.lu().solve(r.transpose()).transpose();
    for (Eigen::Index t = 0; t < T; ++t) {
        double predicted = m.truth.expected_return[5];
        for (Eigen::Index k = 0; k < 5; ++k) predicted += m.truth.style_beta[5][static_cast<std::size_t>(k)] * h(t, k);
        EXPECT_NEAR(m.stocks[static_cast<std::size_t>(5 * T + t)].excess_return, predicted, 1e-12);
    }
    // The first month's smb entry compounds the same daily series.
    double g = 1.0;
    for (Eigen::Index t = 0; t < T && m.days[static_cast<std::size_t>(t)].month_index() == m.days[0].month_index(); ++t)
        g *= 1.0 + h(t, 0);
    EXPECT_NEAR(m.ff.values(0, 1), g - 1.0, 1e-12);
    for (const auto& row : m.truth.style_beta)
        for (double v : row) EXPECT_LE(std::abs(v), spec.style_beta_spread);

    spec.style_vol = 0.0;
    const auto flat = priced_cross_section(spec);
    EXPECT_EQ(flat.ff.values.block(0, 1, flat.ff.values.rows(), 5).cwiseAbs().maxCoeff(), 0.0);
}

TEST(PricedCrossSection, ChainsNearThirtyDaysSurviveFilter) {
    const auto m = priced_cross_section(small_spec());
    const auto groups = market_data::select_expiries(m.options);
    ASSERT_EQ(groups.size(), 4u * 130u);
    int accepted = 0;
    for (std::size_t g = 0; g < groups.size(); g += 13) {
        const auto& grp = groups[g];
        const int days = grp.expiry_date - grp.quote_date;
        EXPECT_GE(days, 23);
        EXPECT_LE(days, 37);
        const auto r = market_data::filter_chain(grp.quotes, {grp.underlying_id, grp.quote_date, grp.expiry_date,
                                                              kMissing, 0.01});
        accepted += std::holds_alternative<market_data::OptionChain>(r) ? 1 : 0;
    }
    EXPECT_EQ(accepted, 40);
}

TEST(MarketSpecKeyValues, RoundTrip) {
    MarketSpec s;
    s.seed = 77;
    s.n_stocks = 12;
    s.n_option_firms = 5;
    s.premium_pct = -0.123;
    s.quotes.half_spread = 0.02;
    const auto back = market_spec_from_key_values(parse_key_values(to_key_values(s)));
    EXPECT_EQ(back.seed, 77u);
    EXPECT_EQ(back.n_stocks, 12);
    EXPECT_EQ(back.premium_pct, -0.123);
    EXPECT_EQ(back.quotes.half_spread, 0.02);
    EXPECT_EQ(back.start, s.start);
    EXPECT_EQ(to_key_values(back), to_key_values(s));
}

TEST(MarketSpecKeyValues, RejectsUnknownAndOutOfRange) {
    EXPECT_THROW(market_spec_from_key_values({{"colour", "blue"}}), std::invalid_argument);
    EXPECT_THROW(market_spec_from_key_values({{"n_stocks", "0"}}), std::invalid_argument);
    EXPECT_THROW(market_spec_from_key_values({{"n_option_firms", "500"}, {"n_stocks", "10"}}), std::invalid_argument);
}

TEST(WriteMarket, FilesLoadBack) {
    test::TempDir dir;
    const auto spec = small_spec();
    const auto m = priced_cross_section(spec);
    write_market(dir.path(), m, spec);
    const auto opts = market_data::load_option_csv(dir / "options.csv");
    EXPECT_TRUE(opts.errors.empty());
    EXPECT_EQ(opts.records.size(), m.options.size());
    const auto stocks = market_data::load_stock_csv(dir / "stocks.csv");
    EXPECT_EQ(stocks.records.size(), m.stocks.size());
    EXPECT_EQ(market_data::load_rate_csv(dir / "rates.csv").records.size(), m.rates.size());
    EXPECT_EQ(portfolio::load_ff_csv(dir / "ff_factors.csv").dates, m.ff.dates);
    EXPECT_EQ(market_spec_from_key_values(parse_key_values(test::read_text(dir / "synth_spec.txt"))).seed, spec.seed);
    EXPECT_EQ(test::read_text(dir / "truth.csv").rfind("stock_id,fear_beta,market_beta,expected_return,smb_beta,hml_beta,rmw_beta,cma_beta,mom_beta\n", 0), 0u);
}
