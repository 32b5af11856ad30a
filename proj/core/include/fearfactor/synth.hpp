#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fearfactor/market_data.hpp"
#include "fearfactor/portfolio.hpp"

namespace fearfactor::synth {

double bs_call(double spot, double strike, double rate, double vol, double maturity);
double bs_put(double spot, double strike, double rate, double vol, double maturity);
double bs_call_delta(double spot, double strike, double rate, double vol, double maturity);

struct QuoteStyle {
    double half_spread = 0.01;  // fraction of mid
    double tick = 0.01;         // floor on the half-spread
    long long volume = 100;
    long long open_interest = 1000;
};

/// Black-Scholes chain on strikes lo, lo + step, ... <= hi, both rights per strike.
/// The half-spread is max(half_spread * mid, tick), capped at half the mid so bids stay
/// positive. Throws std::invalid_argument if vol <= 0, step <= 0 or fewer than 4 strikes.
market_data::OptionChain bs_chain(double spot, double rate, double vol, int days_to_expiry, double strike_lo,
                                  double strike_hi, double step, const QuoteStyle& style = {},
                                  const std::string& underlying_id = "SYN", Date quote_date = Date(2020, 1, 2));

/// Settings of the factor-panel generator x_it = sum_k l_ik f_kt + noise_sd * e_it.
struct FactorPanelSpec {
    std::uint64_t seed = 1;
    int n_firms = 100;
    int n_days = 526;
    double ar = 0.0;         // AR(1) coefficient of each factor, unit stationary variance
    double noise_sd = 0.1;   // relative to the factor's standard deviation
    double mask_rate = 0.0;  // fraction of cells set missing
    /// Variance share of each factor. One factor loads 1 on every firm; a second loads
    /// +1/-1 on alternate firms. Loadings are scaled by sqrt(share).
    std::vector<double> shares{1.0};
};

struct FactorPanel {
    Eigen::MatrixXd panel;         // days x firms, NaN where masked
    Eigen::MatrixXd true_factors;  // days x k
    Eigen::MatrixXd loadings;      // firms x k
};

FactorPanel factor_panel(const FactorPanelSpec& spec);

/// A small economy in which one common "bad fear" state variable drives firms'
/// option-implied variances and carries a return premium.
///   fear x_t = ar x_{t-1} + sqrt(1 - ar^2) e_t      (unit stationary variance)
///   firm vol^2_it = base_var_i + load_i x_t + var_noise * n_it   (floored)
///   r_it = mu_i + b_i fear_return_vol e_t + m_i (mkt_t - E mkt) + s_i' h_t + idio_vol z_it
///   mu_i = m_i market_premium + b_i premium_pct / 100 / 21
/// h_t holds zero-mean daily returns of the five non-market benchmark factors (smb, hml,
/// rmw, cma, mom) with loadings s_i; their monthly compounded values fill the factor table.
/// The index's variance follows its own market-fear process.
struct MarketSpec {
    std::uint64_t seed = 1;
    int n_stocks = 200;
    int n_option_firms = 25;
    int n_days = 2520;
    Date start = Date(2010, 1, 4);
    double premium_pct = -0.40;      // percent per month per unit of b
    double beta_spread = 1.5;        // b_i ~ U(-beta_spread, beta_spread)
    double fear_ar = 0.98;
    double fear_return_vol = 0.0012;
    double idio_vol = 0.003;
    double market_vol = 0.01;
    double market_premium = 0.0003;  // daily
    double style_vol = 0.0045;       // daily sd of each non-market benchmark factor
    double style_beta_spread = 0.5;  // s_ik ~ U(-style_beta_spread, style_beta_spread)
    double var_noise = 0.003;
    double rate = 0.01;
    int strike_steps = 6;            // strikes on each side of spot
    double strike_width = 0.5;       // grid step in units of vol * sqrt(T) * spot
    QuoteStyle quotes{};
};

std::string to_key_values(const MarketSpec& spec);
MarketSpec market_spec_from_key_values(const std::map<std::string, std::string>& kv);

struct Truth {
    std::vector<std::string> stock_ids;
    std::vector<double> fear_beta;    // b_i
    std::vector<double> market_beta;  // m_i
    std::vector<std::array<double, 5>> style_beta;  // s_i on smb, hml, rmw, cma, mom
    std::vector<double> expected_return;  // mu_i, daily
};

struct SyntheticMarket {
    std::vector<Date> days;
    std::vector<market_data::OptionQuote> options;
    std::vector<market_data::StockRecord> stocks;
    std::vector<market_data::RateRecord> rates;
    portfolio::FactorTable ff;
    Truth truth;
    std::vector<double> fear;      // x_t
    std::vector<double> fear_shock;  // e_t
};

/// Weekday calendar of `n` days starting at `start` (moved forward to a weekday).
std::vector<Date> weekday_calendar(Date start, int n);

SyntheticMarket priced_cross_section(const MarketSpec& spec);

inline constexpr const char* kIndexId = "INDEX";

/// Writes options.csv, stocks.csv, rates.csv, ff_factors.csv, truth.csv and
/// synth_spec.txt into `dir`.
void write_market(const std::filesystem::path& dir, const SyntheticMarket& market, const MarketSpec& spec);

}  // namespace fearfactor::synth
