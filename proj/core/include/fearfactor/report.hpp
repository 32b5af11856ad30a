#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fearfactor/cross_section.hpp"
#include "fearfactor/implied_variance.hpp"
#include "fearfactor/portfolio.hpp"

namespace fearfactor::report {

/// Plain-text table: first column left-aligned, the rest right-aligned. A row with a
/// single cell is a section heading; an empty row is a rule.
struct TextTable {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::string render() const;
};

std::string table1(const implied_variance::PanelSummary& summary);

struct ExplainedColumn {
    std::string name;
    std::vector<double> rolling;  // per-window variance explained, NaN skipped
    double full_sample = kMissing;
};
std::string table2(const std::vector<ExplainedColumn>& columns);

struct SortColumn {
    std::string label;
    portfolio::MeanT excess;
    std::optional<portfolio::AlphaResult> ff5;
    std::optional<portfolio::AlphaResult> ff5_mom;
};

struct SortSummary {
    std::string title;
    std::vector<SortColumn> columns;  // quantiles then the high-minus-low spread
};

/// Mean excess return with Newey-West t and benchmark alphas for every beta bucket and
/// the spread. Alphas are left out where fewer than 36 months overlap the benchmarks.
SortSummary summarize_sort(const std::string& title, const portfolio::PortfolioReturnPanel& panel,
                           const portfolio::FactorTable& ff, int nw_lags = 12);
std::string table3(const std::vector<SortSummary>& panels);

std::string table6(const std::vector<std::pair<std::string, cross_section::RiskPremiumEstimate>>& columns);
std::string table9(const std::vector<std::pair<std::string, cross_section::ThreePassResult>>& columns);

}  // namespace fearfactor::report
