#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fearfactor/errors.hpp"
#include "fearfactor/exposures.hpp"
#include "fearfactor/market_data.hpp"
#include "fearfactor/series.hpp"

namespace fearfactor::portfolio {

/// Month-end cross-sections built from daily stock records. Rows are calendar
/// months (dated at the last trading day seen in the month), columns stocks by id.
struct MonthlyPanel {
    std::vector<Date> months;
    std::vector<std::string> stocks;
    Eigen::MatrixXd market_cap;  // last observation in the month
    Eigen::MatrixXd price;       // last observation in the month
    Eigen::MatrixXd ret;         // prod(1 + r_daily) - 1 over the month
    Eigen::MatrixXd volume;      // sum of daily volume

    [[nodiscard]] std::optional<std::size_t> month_of(Date d) const;
};

MonthlyPanel monthly_panel(std::span<const market_data::StockRecord> records);

/// Compounds daily returns: prod(1 + r) - 1.
double compound(std::span<const double> daily);

struct EligibilityRules {
    double cap_bottom_fraction = 0.30;
    double min_price = 5.0;
    double return_trim_fraction = 0.05;  // removed from each tail
};

/// Stock columns eligible to be held in month t+1, judged on month-t data. Each rule
/// is evaluated on the full month-t cross-section of stocks with cap, price and
/// return present: the floor(30%) smallest caps, prices below $5, and the floor(5%)
/// lowest and highest returns are removed. Ties break by stock order.
std::vector<std::size_t> eligible_universe(const MonthlyPanel& panel, std::size_t month,
                                           const EligibilityRules& rules = {});

enum class Weighting { value, equal };
enum class Scheme { single, controlled, conditional_double, unconditional_double };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct SortSpec {
    int n_quantiles = 5;
    Weighting weighting = Weighting::value;
    Scheme scheme = Scheme::single;
    int n_control_quantiles = 5;
};

/// Everything needed to form portfolios at one month end and hold them a month.
struct Formation {
    Date formation;
    Date holding;
    std::vector<std::string> ids;
    std::vector<double> sort_key;     // e.g. beta on CF_minus
    std::vector<double> control_key;  // empty for single sorts
    std::vector<double> cap;          // month-t market cap (weights)
    std::vector<double> next_return;  // month t+1 return, NaN if missing
};

struct Member {
    std::string stock_id;
    int bucket = 0;  // index into PortfolioReturnPanel::labels (cell for double sorts)
    double weight = 0.0;
};

struct PortfolioReturnPanel {
    Scheme scheme = Scheme::single;
    std::vector<std::string> labels;
    std::vector<Date> dates;  // holding months
    Eigen::MatrixXd returns;  // months x labels, NaN where undefined
    Eigen::MatrixXi n_stocks; // members with a return, months x labels
    std::vector<double> spread;  // top minus bottom beta bucket
    std::vector<std::vector<Member>> memberships;  // per month
    /// Month-t cap share of each label in the eligible universe (single and
    /// unconditional cells only; NaN for derived labels).
    Eigen::MatrixXd weight_share;

    [[nodiscard]] Eigen::Index column(const std::string& label) const;
    [[nodiscard]] DatedSeries series(const std::string& label) const;
    [[nodiscard]] DatedSeries spread_series() const { return {dates, spread}; }
};

/// Equal-count buckets by ascending key with ties broken by position:
/// bucket(rank) = floor(rank * q / n).
std::vector<int> quantile_buckets(std::span<const double> key, int q);

/// Forms and holds portfolios month by month.
///  single: buckets on sort_key.
///  controlled: control quantiles first, then sort_key quantiles within each; beta
///    bucket j is the equal-weighted average of the control cells' bucket-j returns.
///  conditional_double: same nesting, reporting every cell, both margins and the
///    per-row / per-column spreads.
///  unconditional_double: independent breakpoints on both keys; empty cells are NaN.
/// A month with fewer stocks than cells is left missing.
PortfolioReturnPanel sort_portfolios(std::span<const Formation> formations, const SortSpec& spec);

enum class ControlSource { none, beta_control, market_cap, volume };
ControlSource control_source_from_string(const std::string& s);

/// Joins month-t betas with the monthly panel: eligible stocks with a beta at month t,
/// the chosen control, month-t caps and month t+1 returns.
std::vector<Formation> build_formations(const MonthlyPanel& panel, std::span<const exposures::ExposureEstimate> betas,
                                        ControlSource control, const EligibilityRules& rules = {});

/// Daily returns of each label of a single or controlled sort inside its holding
/// month, with formation weights held fixed and renormalized over stocks that have a
/// return that day. Rows are the daily grid `days`.
Eigen::MatrixXd daily_bucket_returns(const PortfolioReturnPanel& panel,
                                     std::span<const exposures::StockReturns> daily, const std::vector<Date>& days);

/// Monthly benchmark factors, decimal fractions.
struct FactorTable {
    std::vector<Date> dates;
    std::vector<std::string> names;
    Eigen::MatrixXd values;  // dates x names

    [[nodiscard]] Eigen::Index column(const std::string& name) const;
};

inline constexpr const char* kFactorFileHeader = "date,mkt_rf,smb,hml,rmw,cma,mom,rf";
FactorTable load_ff_csv(const std::filesystem::path& path);
void write_ff_csv(std::ostream& out, const FactorTable& table);

enum class FactorModel { ff5, ff5_mom };

struct AlphaResult {
    double alpha = 0.0;
    double t_alpha = 0.0;
    std::vector<std::string> factor_names;
    Eigen::VectorXd betas;
    std::size_t n_months = 0;
};

/// Time-series OLS of monthly portfolio returns on the benchmark factors matched by
/// calendar month; Newey-West t-statistic on the intercept.
/// Throws InsufficientOverlap below `min_months` matched months.
AlphaResult alpha_regression(const DatedSeries& portfolio_returns, const FactorTable& factors, FactorModel model,
                             int nw_lags = 12, std::size_t min_months = 36);

/// Mean and Newey-West t-statistic of a series, skipping NaN.
struct MeanT {
    double mean = kMissing;
    double t = kMissing;
    std::size_t n = 0;
};
MeanT mean_with_t(std::span<const double> values, int nw_lags = 12);

inline constexpr const char* kPortfolioHeader = "scheme,bucket,date,return,n_stocks";
void write_portfolios_csv(std::ostream& out, const PortfolioReturnPanel& panel, const std::string& scheme_tag);
void write_memberships_csv(std::ostream& out, const PortfolioReturnPanel& panel);

}  // namespace fearfactor::portfolio
