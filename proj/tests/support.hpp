#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "fearfactor/market_data.hpp"
#include "fearfactor/pipeline.hpp"
#include "fearfactor/synth.hpp"

namespace fearfactor::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("fearfactor_test_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Clean quote with positive volume, open interest, implied vol and delta.
inline market_data::OptionQuote quote(double strike, market_data::Right right, double bid, double ask,
                                      Date quote_date = Date(2020, 1, 2), Date expiry = Date(2020, 2, 1)) {
    market_data::OptionQuote q;
    q.underlying_id = "AAA";
    q.quote_date = quote_date;
    q.expiry_date = expiry;
    q.strike = strike;
    q.right = right;
    q.bid = bid;
    q.ask = ask;
    q.volume = 10;
    q.open_interest = 100;
    q.implied_vol = 0.3;
    q.delta = right == market_data::Right::call ? 0.5 : -0.5;
    return q;
}

/// Black-Scholes prices written independently of the library's synthetic generator.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double bs_call_price(double s, double k, double r, double sigma, double t) {
    const double d1 = (std::log(s / k) + (r + 0.5 * sigma * sigma) * t) / (sigma * std::sqrt(t));
    const double d2 = d1 - sigma * std::sqrt(t);
    return s * norm_cdf(d1) - k * std::exp(-r * t) * norm_cdf(d2);
}

inline double bs_put_price(double s, double k, double r, double sigma, double t) {
    return bs_call_price(s, k, r, sigma, t) - s + k * std::exp(-r * t);
}

/// Frictionless chain of out-of-the-money Black-Scholes quotes on `strikes` (ascending),
/// with both rights at k0 = largest strike <= F.
inline market_data::OptionChain exact_bs_chain(double s, double r, double sigma, int days,
                                               const std::vector<double>& strikes) {
    market_data::OptionChain c;
    c.underlying_id = "BS";
    c.quote_date = Date(2020, 1, 2);
    c.expiry_date = c.quote_date + days;
    c.spot = s;
    c.risk_free_rate = r;
    const double t = days / 365.0;
    c.forward = s * std::exp(r * t);
    c.k0 = strikes.front();
    for (double k : strikes)
        if (k <= c.forward) c.k0 = k;
    for (double k : strikes) {
        if (k <= c.k0) {
            const double p = bs_put_price(s, k, r, sigma, t);
            c.quotes.push_back(quote(k, market_data::Right::put, p, p, c.quote_date, c.expiry_date));
        }
        if (k >= c.k0) {
            const double p = bs_call_price(s, k, r, sigma, t);
            c.quotes.push_back(quote(k, market_data::Right::call, p, p, c.quote_date, c.expiry_date));
        }
    }
    return c;
}

/// Composite Simpson integral of the implied-variance integrand over [lo, hi] with the
/// put/call switch at k0, minus the forward correction.
inline double integrated_variance(double s, double r, double sigma, double t, double lo, double hi, double k0,
                                  int panels = 200000) {
    const double f = s * std::exp(r * t);
    auto g = [&](double k) {
        const double q = k < k0 ? bs_put_price(s, k, r, sigma, t)
                         : k > k0 ? bs_call_price(s, k, r, sigma, t)
                                  : 0.5 * (bs_put_price(s, k, r, sigma, t) + bs_call_price(s, k, r, sigma, t));
        return std::exp(r * t) * q / (k * k);
    };
    auto simpson = [&](double a, double b, int n) {
        if (b <= a) return 0.0;
        n += n % 2;
        const double h = (b - a) / n;
        double acc = g(a) + g(b);
        for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * g(a + i * h);
        return acc * h / 3.0;
    };
    // Split at k0 where the integrand has a kink.
    const double mass = simpson(lo, std::min(k0, hi), panels) + simpson(std::max(k0, lo), hi, panels);
    return 2.0 / t * mass - (f / k0 - 1.0) * (f / k0 - 1.0) / t;
}

/// Small synthetic market behind the golden tables.
inline synth::MarketSpec golden_market() {
    synth::MarketSpec s;
    s.seed = 5;
    s.n_stocks = 60;
    s.n_option_firms = 6;
    s.n_days = 1150;  // long enough for 36 months of alphas
    s.strike_steps = 4;
    return s;
}

inline pipeline::RunConfig golden_config(const std::filesystem::path& data, const std::filesystem::path& out) {
    pipeline::RunConfig cfg;
    cfg.data_dir = data;
    cfg.out_dir = out;
    cfg.factor_window = 126;
    cfg.beta_window = 126;
    cfg.beta_min_obs = 100;
    return cfg;
}

inline void run_all_stages(const pipeline::RunConfig& cfg) {
    using pipeline::Stage;
    for (auto s : {Stage::ingest, Stage::iv, Stage::factors, Stage::betas, Stage::sort, Stage::fmb, Stage::threepass})
        pipeline::run_stage(s, cfg);
}

inline constexpr const char* kGoldenTables[] = {"table1.txt", "table2.txt", "table3.txt", "table6.txt", "table9.txt"};

}  // namespace fearfactor::test
