#include <gtest/gtest.h>

#include <sstream>

#include "fearfactor/report.hpp"
#include "fearfactor/rng.hpp"

using namespace fearfactor;
using namespace fearfactor::report;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string l;
    while (std::getline(in, l)) out.push_back(l);
    return out;
}

portfolio::FactorTable random_ff(int months, std::uint64_t seed) {
    CounterRng rng(seed, 0);
    portfolio::FactorTable ff;
    ff.names = {"mkt_rf", "smb", "hml", "rmw", "cma", "mom", "rf"};
    ff.values.resize(months, 7);
    for (int m = 0; m < months; ++m) {
        ff.dates.push_back(Date(2001 + m / 12, static_cast<unsigned>(m % 12 + 1), 28));
        for (int k = 0; k < 7; ++k) ff.values(m, k) = 0.03 * rng.normal();
    }
    return ff;
}

portfolio::PortfolioReturnPanel random_panel(int months, std::uint64_t seed) {
    CounterRng rng(seed, 1);
    portfolio::PortfolioReturnPanel p;
    p.labels = {"1", "2", "3", "4", "5"};
    p.returns.resize(months, 5);
    p.n_stocks = Eigen::MatrixXi::Constant(months, 5, 10);
    p.weight_share = Eigen::MatrixXd::Constant(months, 5, 0.2);
    for (int m = 0; m < months; ++m) {
        p.dates.push_back(Date(2001 + m / 12, static_cast<unsigned>(m % 12 + 1), 28));
        for (int j = 0; j < 5; ++j) p.returns(m, j) = 0.01 + 0.04 * rng.normal();
        p.spread.push_back(p.returns(m, 4) - p.returns(m, 0));
    }
    p.memberships.resize(static_cast<std::size_t>(months));
    return p;
}

}  // namespace

TEST(TextTable, RenderLayout) {
    TextTable t;
    t.title = "T";
    t.header = {"", "a", "bb"};
    t.rows = {{"x", "1", "22"}, {"Sec"}, {}, {"long name", "3", "4"}};
    const std::string rule(18, '-');
    const std::string expected = "T\n" + rule + "\n           a  bb\n" + rule + "\nx          1  22\nSec\n" + rule +
                                 "\nlong name  3   4\n" + rule + "\n";
    EXPECT_EQ(t.render(), expected);
}

TEST(Table1, HandValues) {
    implied_variance::PanelSummary s;
    s.total = {0.187, 0.1, 0.02};
    s.good = {0.067, 0.05, 0.004};
    s.bad = {0.120, 0.07, 0.009};
    const auto l = lines(table1(s));
    ASSERT_EQ(l.size(), 8u);
    EXPECT_NE(l[4].find("0.187"), std::string::npos);
    EXPECT_NE(l[4].find("0.067"), std::string::npos);
    EXPECT_NE(l[4].find("0.120"), std::string::npos);
    EXPECT_EQ(l[6].rfind("Ave. pairwise covariance", 0), 0u);
}

TEST(Table2, RollingStatisticsInPercent) {
    ExplainedColumn c{"total", {0.5, kMissing, 0.7, 0.6}, 0.65};
    const auto text = table2({c});
    auto row_value = [&](const std::string& name) {
        for (const auto& l : lines(text))
            if (l.rfind(name, 0) == 0) return l.substr(l.find_last_of(' ') + 1);
        return std::string("absent");
    };
    EXPECT_EQ(row_value("Mean (%)"), "60.00");
    EXPECT_EQ(row_value("Median (%)"), "60.00");
    EXPECT_EQ(row_value("Min (%)"), "50.00");
    EXPECT_EQ(row_value("Max (%)"), "70.00");
    EXPECT_EQ(row_value("Std (%)"), "10.00");
    EXPECT_EQ(row_value("% variation"), "65.00");
}

TEST(SummarizeSort, ColumnsAndAlphas) {
    const auto panel = random_panel(60, 3);
    const auto ff = random_ff(60, 3);
    const auto s = summarize_sort("CF_minus", panel, ff);
    ASSERT_EQ(s.columns.size(), 6u);
    EXPECT_EQ(s.columns.back().label, "5-1");
    EXPECT_TRUE(s.columns[0].ff5.has_value());
    EXPECT_TRUE(s.columns[0].ff5_mom.has_value());
    EXPECT_NEAR(s.columns[2].excess.mean, panel.returns.col(2).mean(), 1e-15);
    const auto text = table3({s});
    EXPECT_NE(text.find("alpha FF5+MOM"), std::string::npos);
    EXPECT_NE(text.find("5-1"), std::string::npos);
}

TEST(SummarizeSort, ShortSampleOmitsAlphas) {
    const auto s = summarize_sort("short", random_panel(20, 4), random_ff(20, 4));
    EXPECT_FALSE(s.columns[0].ff5.has_value());
    EXPECT_EQ(s.columns[0].excess.n, 20u);
}

TEST(Table6, UnionOfFactorsWithBlanks) {
    cross_section::RiskPremiumEstimate a, b;
    a.factor_name = "CF_minus";
    a.lambda = -0.004;
    a.companions = {{"mkt_rf", 0.005, 1.0}};
    b.factor_name = "CF_minus";
    b.lambda = -0.003;
    b.companions = {{"smb", 0.001, 0.4}};
    const auto l = lines(table6({{"(1)", a}, {"(2)", b}}));
    int factor_rows = 0;
    for (const auto& x : l)
        if (x.rfind("lambda_", 0) == 0) ++factor_rows;
    EXPECT_EQ(factor_rows, 4);  // lambda_0, CF_minus, mkt_rf, smb
    bool found = false;
    for (const auto& x : l)
        if (x.rfind("lambda_CF_minus", 0) == 0) {
            found = true;
            EXPECT_NE(x.find("-0.40"), std::string::npos);
            EXPECT_NE(x.find("-0.30"), std::string::npos);
        }
    EXPECT_TRUE(found);
}

TEST(Table9, OneColumnPerSpec) {
    cross_section::ThreePassResult r;
    r.lambda = -0.0041;
    r.t_stat = -2.5;
    r.weak_factor_p = 0.001;
    r.n_latent_factors = 4;
    const auto text = table9({{"mimic", r}, {"innov", r}, {"ew", r}});
    const auto l = lines(text);
    EXPECT_NE(l[2].find("mimic"), std::string::npos);
    EXPECT_NE(l[2].find("ew"), std::string::npos);
    EXPECT_NE(text.find("-0.41"), std::string::npos);
    EXPECT_NE(text.find("No. factors"), std::string::npos);
}
