#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fearfactor/market_data.hpp"
#include "fearfactor/series.hpp"

namespace fearfactor::exposures {

struct ExposureEstimate {
    std::string stock_id;
    Date as_of_month;  // last trading day of the month on the factor calendar
    double beta_cf = 0.0;
    double beta_control = kMissing;  // NaN when no control is used
    double intercept = 0.0;
    int n_obs = 0;
    std::string factor_name;
    std::string control_name;  // "none" without a control
};

struct StockReturns {
    std::string stock_id;
    DatedSeries returns;  // daily excess returns
};

/// Regressor series, e.g. innovations of CF_minus or of the VIX.
struct NamedSeries {
    std::string name;
    DatedSeries series;
};

struct BetaOptions {
    std::size_t window = 252;
    std::size_t min_obs = 200;
};

struct BetaRun {
    std::vector<ExposureEstimate> estimates;  // ordered by (as_of_month, stock_id)
    std::vector<std::string> diagnostics;     // singular or degenerate regressions that were skipped
};

/// At each month end of the factor's date grid, OLS of each stock's daily excess
/// return on a constant, the factor and the optional control over the trailing
/// `window` grid days. Only days where all series are observed count; stocks below
/// `min_obs` emit nothing that month. A rank-deficient design or a constant response
/// is skipped and reported in diagnostics.
BetaRun estimate_betas(std::span<const StockReturns> stocks, const NamedSeries& factor,
                       const std::optional<NamedSeries>& control, const BetaOptions& options = {});

/// Splits stock records into per-stock daily return series ordered by id.
std::vector<StockReturns> group_returns(std::span<const market_data::StockRecord> records);

inline constexpr const char* kBetaHeader =
    "stock_id,as_of_month,factor_name,control_name,beta_cf,beta_control,intercept,n_obs";

void write_betas_csv(std::ostream& out, std::span<const ExposureEstimate> estimates);
std::vector<ExposureEstimate> read_betas_csv(const std::filesystem::path& path);

}  // namespace fearfactor::exposures
