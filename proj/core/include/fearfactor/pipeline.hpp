#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fearfactor/cross_section.hpp"
#include "fearfactor/exposures.hpp"
#include "fearfactor/factor_extraction.hpp"
#include "fearfactor/implied_variance.hpp"
#include "fearfactor/market_data.hpp"
#include "fearfactor/portfolio.hpp"

namespace fearfactor::pipeline {

/// Bad configuration or malformed input; the CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::filesystem::path data_dir = ".";
    std::filesystem::path options;  // file or directory of CSVs; default data_dir/options.csv
    std::filesystem::path stocks;   // default data_dir/stocks.csv
    std::filesystem::path rates;    // default data_dir/rates.csv
    std::filesystem::path ff;       // default data_dir/ff_factors.csv
    std::filesystem::path out_dir = "out";
    int min_days = 23;
    int max_days = 37;
    int min_quotes = 4;
    int factor_window = 252;
    double min_coverage = 0.8;
    int beta_window = 252;
    int beta_min_obs = 200;
    int n_quantiles = 5;
    int n_control_quantiles = 5;
    int n_test_assets = 10;
    int nw_lags = 12;
    std::vector<std::string> families{"CF", "CF_plus", "CF_minus"};
    std::string beta_control = "none";  // none | vix | mf
    std::string sort_scheme = "single";
    std::string sort_control = "beta_control";  // beta_control | market_cap | volume
    std::string weighting = "value";
    std::string index_id = "INDEX";
    int n_latent = 0;  // 0 picks the count by eigenvalue ratio
    std::uint64_t seed = 7;
    bool allow_bad_rows = false;

    [[nodiscard]] std::filesystem::path options_path() const;
    [[nodiscard]] std::filesystem::path stocks_path() const;
    [[nodiscard]] std::filesystem::path rates_path() const;
    [[nodiscard]] std::filesystem::path ff_path() const;
};

/// Sets one field from its snake_case key. Throws ValidationError on unknown keys
/// or unparsable values.
void apply(RunConfig& cfg, const std::string& key, const std::string& value);
/// Every config key, in echo order.
std::vector<std::string> config_keys();
/// Reads flat key=value lines ('#' comments and blank lines allowed).
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical key=value echo of every field, in a fixed order.
std::string to_key_values(const RunConfig& cfg);
/// Range checks shared by all stages.
void validate(const RunConfig& cfg);

struct ChainRecord {
    std::string underlying_id;
    Date quote_date;
    Date expiry_date;
    double spot = kMissing;
    double forward = kMissing;
    double k0 = kMissing;
    int n_quotes = 0;
    std::string status;  // "ok" or the rejection reason
};

struct IvResult {
    implied_variance::VariancePanel panel;
    std::vector<ChainRecord> chains;
};

/// Expiry selection, chain filtering and variance computation for every
/// (underlying, day). Spots come from the stock file's prices (NaN when absent).
IvResult compute_iv(std::span<const market_data::OptionQuote> quotes,
                    std::span<const market_data::StockRecord> stocks, const market_data::RateTable& rates,
                    const RunConfig& cfg);

struct FactorResult {
    std::vector<factors::FactorSeries> series;  // CF family, then MF family when the index is present
    implied_variance::PanelSummary summary;
    std::vector<double> full_sample_explained;  // total, good, bad
    cross_section::DatedMatrix ew_levels;       // equal-weighted firm averages: total, good, bad

    [[nodiscard]] const factors::FactorSeries& get(const std::string& name) const;
};

FactorResult compute_factors(const implied_variance::VariancePanel& panel, const RunConfig& cfg);

/// Betas for every configured family, keyed by family name.
std::map<std::string, exposures::BetaRun> compute_betas(std::span<const exposures::StockReturns> returns,
                                                        const std::vector<factors::FactorSeries>& series,
                                                        const RunConfig& cfg);

struct FamilySort {
    std::string family;
    portfolio::PortfolioReturnPanel quintiles;  // single sort; the mimicking base assets
    portfolio::PortfolioReturnPanel scheme;     // configured scheme (same as quintiles for "single")
    portfolio::PortfolioReturnPanel deciles;
    cross_section::DatedMatrix assets;          // decile monthly returns
    cross_section::MimickingPortfolio mimic;
    cross_section::DatedMatrix pricing;         // monthly: mimic, innov, ew, benchmark factors
};

struct SortResult {
    std::vector<FamilySort> families;
    std::string table3;

    [[nodiscard]] const FamilySort& get(const std::string& family) const;
};

SortResult compute_sorts(std::span<const market_data::StockRecord> stocks,
                         const std::map<std::string, exposures::BetaRun>& betas,
                         const std::vector<factors::FactorSeries>& series, const cross_section::DatedMatrix& ew_levels,
                         const portfolio::FactorTable& ff, const RunConfig& cfg);

struct PricingResult {
    std::vector<cross_section::PremiumRow> rows;
    std::string table;
    std::vector<std::string> warnings;  // specs that could not be estimated
};

/// Fama-MacBeth specs per family: "fmb_<family>_ff5" (factor plus the five benchmark
/// factors) and "fmb_<family>_mkt" (factor plus market).
PricingResult compute_fmb(const std::map<std::string, std::pair<cross_section::DatedMatrix, cross_section::DatedMatrix>>&
                              assets_and_pricing,
                          const RunConfig& cfg);

/// Three-pass specs per family with the factor measured as the mimicking portfolio
/// ("3pass_<family>_mimic"), the monthly factor innovation ("_innov") and the monthly
/// innovation of the equal-weighted firm average ("_ew").
PricingResult compute_three_pass(
    const std::map<std::string, std::pair<cross_section::DatedMatrix, cross_section::DatedMatrix>>& assets_and_pricing,
    const RunConfig& cfg);

struct PipelineResult {
    IvResult iv;
    FactorResult factors;
    std::map<std::string, exposures::BetaRun> betas;
    SortResult sorts;
    PricingResult fmb;
    PricingResult three_pass;
};

PipelineResult run_in_memory(std::span<const market_data::OptionQuote> quotes,
                             std::span<const market_data::StockRecord> stocks, const market_data::RateTable& rates,
                             const portfolio::FactorTable& ff, const RunConfig& cfg);

enum class Stage { ingest, iv, factors, betas, sort, fmb, threepass };
std::string to_string(Stage s);

struct StageReport {
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::vector<std::string> warnings;
};

/// Runs one stage from files in cfg.out_dir (and the raw inputs), writing its outputs
/// atomically: everything goes to temporary files that are renamed only when the
/// stage succeeds.
StageReport run_stage(Stage stage, const RunConfig& cfg);

}  // namespace fearfactor::pipeline
