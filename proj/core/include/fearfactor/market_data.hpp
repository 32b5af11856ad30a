#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fearfactor/csv.hpp"
#include "fearfactor/date.hpp"

namespace fearfactor::market_data {

enum class Right { call, put };

struct OptionQuote {
    std::string underlying_id;
    Date quote_date;
    Date expiry_date;
    double strike = 0.0;
    Right right = Right::call;
    double bid = 0.0;
    double ask = 0.0;
    long long volume = 0;
    long long open_interest = 0;
    std::optional<double> implied_vol;
    std::optional<double> delta;

    [[nodiscard]] double mid() const { return 0.5 * (bid + ask); }
    bool operator==(const OptionQuote&) const = default;
};

struct ChainMeta {
    std::string underlying_id;
    Date quote_date;
    Date expiry_date;
    double spot = 0.0;
    double risk_free_rate = 0.0;  // annualized, continuously compounded
};

/// One day's quotes for one underlying at one expiry, ascending by strike with the
/// put listed before the call where both rights share a strike.
struct OptionChain {
    std::string underlying_id;
    Date quote_date;
    Date expiry_date;
    double spot = 0.0;
    double risk_free_rate = 0.0;
    std::vector<OptionQuote> quotes;
    /// Parity-implied forward and reference strike, set by filter_chain.
    double forward = 0.0;
    double k0 = 0.0;

    [[nodiscard]] int days_to_expiry() const { return expiry_date - quote_date; }
    /// Calendar days / 365.
    [[nodiscard]] double maturity() const { return days_to_expiry() / 365.0; }
    [[nodiscard]] ChainMeta meta() const { return {underlying_id, quote_date, expiry_date, spot, risk_free_rate}; }
};

struct StockRecord {
    std::string stock_id;
    Date date;
    double excess_return = 0.0;
    double price = 0.0;
    double market_cap = 0.0;
    long long volume = 0;
};

struct RateRecord {
    Date date;
    double rate = 0.0;
};

enum class RejectReason { too_few_quotes, maturity_out_of_range, no_straddle };

std::string to_string(RejectReason r);

struct Rejected {
    RejectReason reason;
    std::string detail;
};

using FilterResult = std::variant<OptionChain, Rejected>;

struct FilterOptions {
    int min_days = 23;
    int max_days = 37;
    std::size_t min_quotes = 4;
};

/// Applies the quote-quality, static-arbitrage and moneyness rules and returns either
/// the surviving chain (with forward and k0 set) or the single rule that killed it.
///
/// Rule order: maturity window; per-quote quality (missing delta or implied vol, zero
/// bid, zero volume, zero open interest, ask < bid); duplicate (strike, right) pairs
/// keep the first; arbitrage on mids (call above spot, put above discounted strike,
/// call mids rising or put mids falling in strike); forward from put-call parity;
/// in-the-money removal relative to k0; minimum survivor count.
FilterResult filter_chain(std::span<const OptionQuote> raw_quotes, const ChainMeta& meta,
                          const FilterOptions& options = {});

/// Re-filters an existing chain, keeping its forward and k0 when already set.
FilterResult filter_chain(const OptionChain& chain, const FilterOptions& options = {});

class NoStraddle : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ForwardEstimate {
    double forward = 0.0;
    double k0 = 0.0;
    double parity_strike = 0.0;  // strike minimizing |C - P|
};

/// F = e^{rT}[C(K*) - P(K*)] + K*, K* the strike with the smallest |C - P| on mids
/// (ties to the lower strike); k0 = largest strike <= F, or the lowest strike if F
/// sits below the whole grid. Duplicate quotes at a strike are averaged.
ForwardEstimate compute_forward(std::span<const OptionQuote> quotes, double rate, double maturity);
ForwardEstimate compute_forward(const OptionChain& chain);

/// Quotes for one (underlying, quote date) at the selected expiry.
struct ChainGroup {
    std::string underlying_id;
    Date quote_date;
    Date expiry_date;
    std::vector<OptionQuote> quotes;
};

/// Groups quotes by (underlying, quote date) and keeps the expiry whose
/// days-to-expiry is closest to 30 within the options' window; ties go to the longer
/// maturity. Days without an admissible expiry are dropped. Output is sorted by
/// (underlying, quote date).
std::vector<ChainGroup> select_expiries(std::span<const OptionQuote> quotes, const FilterOptions& options = {});

template <typename T>
struct LoadResult {
    std::vector<T> records;
    std::vector<csv::RowError> errors;
};

inline constexpr const char* kOptionHeader =
    "underlying_id,quote_date,expiry_date,strike,right,bid,ask,volume,open_interest,implied_vol,delta";
inline constexpr const char* kStockHeader = "stock_id,date,return,price,market_cap,volume";
inline constexpr const char* kRateHeader = "date,rate";

/// Missing file or header mismatch throws csv::FileError; bad rows are reported and skipped.
LoadResult<OptionQuote> load_option_csv(const std::filesystem::path& path);
LoadResult<StockRecord> load_stock_csv(const std::filesystem::path& path);
LoadResult<RateRecord> load_rate_csv(const std::filesystem::path& path);

void write_option_csv(std::ostream& out, std::span<const OptionQuote> quotes);
void write_stock_csv(std::ostream& out, std::span<const StockRecord> records);
void write_rate_csv(std::ostream& out, std::span<const RateRecord> records);

/// Risk-free curve by date with last-observation-carried-forward lookup, or a constant.
class RateTable {
public:
    RateTable() = default;
    explicit RateTable(std::span<const RateRecord> records);
    static RateTable constant(double rate);

    /// Throws std::out_of_range if no rate is on or before `d`.
    [[nodiscard]] double at(Date d) const;

private:
    std::map<Date, double> rates_;
    std::optional<double> constant_;
};

}  // namespace fearfactor::market_data
