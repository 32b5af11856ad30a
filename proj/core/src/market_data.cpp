#include "fearfactor/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <tuple>

namespace fearfactor::market_data {

std::string to_string(RejectReason r) {
    switch (r) {
        case RejectReason::too_few_quotes: return "too_few_quotes";
        case RejectReason::maturity_out_of_range: return "maturity_out_of_range";
        case RejectReason::no_straddle: return "no_straddle";
    }
    return "unknown";
}

namespace {

bool passes_quality(const OptionQuote& q) {
    return q.delta.has_value() && q.implied_vol.has_value() && q.bid > 0.0 && q.volume > 0 && q.open_interest > 0 &&
           q.ask >= q.bid;
}

// Drops quotes whose mid breaks monotonicity in strike for their right. Calls must
// not rise with strike and puts must not fall; a quote is kept only if it is
// consistent with the last kept quote of the same right.
std::vector<OptionQuote> enforce_monotone(std::vector<OptionQuote> quotes) {
    std::vector<OptionQuote> out;
    out.reserve(quotes.size());
    double last_call = std::numeric_limits<double>::infinity();
    double last_put = -std::numeric_limits<double>::infinity();
    for (auto& q : quotes) {
        const double m = q.mid();
        if (q.right == Right::call) {
            if (m > last_call) continue;
            last_call = m;
        } else {
            if (m < last_put) continue;
            last_put = m;
        }
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace

ForwardEstimate compute_forward(std::span<const OptionQuote> quotes, double rate, double maturity) {
    struct StrikeMids {
        double strike;
        double call_sum = 0.0, put_sum = 0.0;
        int calls = 0, puts = 0;
    };
    std::vector<StrikeMids> by_strike;
    std::vector<OptionQuote> sorted(quotes.begin(), quotes.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const OptionQuote& a, const OptionQuote& b) { return a.strike < b.strike; });
    for (const auto& q : sorted) {
        if (by_strike.empty() || by_strike.back().strike != q.strike) by_strike.push_back({q.strike});
        auto& s = by_strike.back();
        if (q.right == Right::call) {
            s.call_sum += q.mid();
            ++s.calls;
        } else {
            s.put_sum += q.mid();
            ++s.puts;
        }
    }
    const StrikeMids* best = nullptr;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& s : by_strike) {
        if (s.calls == 0 || s.puts == 0) continue;
        const double gap = std::abs(s.call_sum / s.calls - s.put_sum / s.puts);
        if (gap < best_gap) {  // strict: ties keep the lower strike
            best_gap = gap;
            best = &s;
        }
    }
    if (!best) throw NoStraddle("no strike quotes both a call and a put");
    ForwardEstimate est;
    est.parity_strike = best->strike;
    est.forward = std::exp(rate * maturity) * (best->call_sum / best->calls - best->put_sum / best->puts) + best->strike;
    est.k0 = by_strike.front().strike;
    for (const auto& s : by_strike) {
        if (s.strike <= est.forward) est.k0 = s.strike;
    }
    return est;
}

ForwardEstimate compute_forward(const OptionChain& chain) {
    return compute_forward(chain.quotes, chain.risk_free_rate, chain.maturity());
}

namespace {

FilterResult filter_impl(std::span<const OptionQuote> raw_quotes, const ChainMeta& meta, const FilterOptions& options,
                         const ForwardEstimate* known) {
    for (const auto& q : raw_quotes) {
        if (q.underlying_id != meta.underlying_id || q.quote_date != meta.quote_date || q.expiry_date != meta.expiry_date)
            throw std::invalid_argument("filter_chain: quote keys differ from chain metadata");
    }
    const int dte = meta.expiry_date - meta.quote_date;
    if (dte < options.min_days || dte > options.max_days)
        return Rejected{RejectReason::maturity_out_of_range, std::to_string(dte) + " days to expiry"};

    const double maturity = dte / 365.0;
    const double discount = std::exp(-meta.risk_free_rate * maturity);

    std::vector<OptionQuote> kept;
    kept.reserve(raw_quotes.size());
    for (const auto& q : raw_quotes) {
        if (!passes_quality(q)) continue;
        const double m = q.mid();
        // spot may be unknown (NaN) for index underlyings; the bound is then skipped
        if (q.right == Right::call && m > meta.spot) continue;
        if (q.right == Right::put && m > q.strike * discount) continue;
        kept.push_back(q);
    }
    std::stable_sort(kept.begin(), kept.end(), [](const OptionQuote& a, const OptionQuote& b) {
        if (a.strike != b.strike) return a.strike < b.strike;
        return a.right == Right::put && b.right == Right::call;
    });
    kept.erase(std::unique(kept.begin(), kept.end(),
                           [](const OptionQuote& a, const OptionQuote& b) {
                               return a.strike == b.strike && a.right == b.right;
                           }),
               kept.end());
    kept = enforce_monotone(std::move(kept));

    if (kept.size() < options.min_quotes)
        return Rejected{RejectReason::too_few_quotes, std::to_string(kept.size()) + " quotes pass quality rules"};

    ForwardEstimate fwd;
    if (known) {
        fwd = *known;
    } else {
        try {
            fwd = compute_forward(kept, meta.risk_free_rate, maturity);
        } catch (const NoStraddle& e) {
            return Rejected{RejectReason::no_straddle, e.what()};
        }
    }

    std::erase_if(kept, [&](const OptionQuote& q) {
        return (q.right == Right::call && q.strike < fwd.k0) || (q.right == Right::put && q.strike > fwd.k0);
    });
    if (kept.size() < options.min_quotes)
        return Rejected{RejectReason::too_few_quotes, std::to_string(kept.size()) + " out-of-the-money quotes"};

    OptionChain chain;
    chain.underlying_id = meta.underlying_id;
    chain.quote_date = meta.quote_date;
    chain.expiry_date = meta.expiry_date;
    chain.spot = meta.spot;
    chain.risk_free_rate = meta.risk_free_rate;
    chain.quotes = std::move(kept);
    chain.forward = fwd.forward;
    chain.k0 = fwd.k0;
    return chain;
}

}  // namespace

FilterResult filter_chain(std::span<const OptionQuote> raw_quotes, const ChainMeta& meta, const FilterOptions& options) {
    return filter_impl(raw_quotes, meta, options, nullptr);
}

FilterResult filter_chain(const OptionChain& chain, const FilterOptions& options) {
    // ITM removal can strip the parity straddle, so the chain's own forward is reused.
    if (chain.forward > 0.0) {
        const ForwardEstimate known{chain.forward, chain.k0, chain.k0};
        return filter_impl(chain.quotes, chain.meta(), options, &known);
    }
    return filter_chain(chain.quotes, chain.meta(), options);
}

std::vector<ChainGroup> select_expiries(std::span<const OptionQuote> quotes, const FilterOptions& options) {
    using Key = std::pair<std::string, Date>;
    std::map<Key, std::map<Date, std::vector<OptionQuote>>> grouped;
    for (const auto& q : quotes) grouped[{q.underlying_id, q.quote_date}][q.expiry_date].push_back(q);

    std::vector<ChainGroup> out;
    out.reserve(grouped.size());
    for (auto& [key, expiries] : grouped) {
        std::vector<OptionQuote>* best = nullptr;
        Date best_expiry;
        int best_gap = std::numeric_limits<int>::max();
        for (auto& [expiry, qs] : expiries) {  // ascending expiry: later ties win with <=
            const int dte = expiry - key.second;
            if (dte < options.min_days || dte > options.max_days) continue;
            const int gap = std::abs(dte - 30);
            if (gap <= best_gap) {
                best_gap = gap;
                best = &qs;
                best_expiry = expiry;
            }
        }
        if (!best) continue;
        out.push_back({key.first, key.second, best_expiry, std::move(*best)});
    }
    return out;
}

namespace {

template <typename T, typename RowParser>
LoadResult<T> load_rows(const std::filesystem::path& path, const char* header, RowParser parse_row) {
    if (!std::filesystem::exists(path)) throw csv::FileError("missing file: " + path.string());
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw csv::FileError(path.string() + ": empty file, header required");
    std::vector<std::string_view> expected = csv::split(header);
    csv::expect_header(lines[0], expected, path);

    LoadResult<T> result;
    result.records.reserve(lines.size() - 1);
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto fields = csv::split(lines[ln]);
        if (fields.size() != expected.size()) {
            result.errors.push_back({ln + 1, "",
                                     "expected " + std::to_string(expected.size()) + " fields, got " +
                                         std::to_string(fields.size())});
            continue;
        }
        std::size_t col = 0;
        try {
            result.records.push_back(parse_row(fields, col));
        } catch (const std::exception& e) {
            result.errors.push_back({ln + 1, std::string(expected[col]), e.what()});
        }
    }
    return result;
}

Right parse_right(std::string_view s) {
    if (s == "C" || s == "c" || s == "call" || s == "CALL" || s == "Call") return Right::call;
    if (s == "P" || s == "p" || s == "put" || s == "PUT" || s == "Put") return Right::put;
    throw std::invalid_argument("right must be C or P, got '" + std::string(s) + "'");
}

std::string require_id(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty identifier");
    return std::string(s);
}

double non_negative(double v, const char* what) {
    if (v < 0.0) throw std::invalid_argument(std::string(what) + " must be >= 0");
    return v;
}

}  // namespace

LoadResult<OptionQuote> load_option_csv(const std::filesystem::path& path) {
    return load_rows<OptionQuote>(path, kOptionHeader, [](const std::vector<std::string_view>& f, std::size_t& c) {
        OptionQuote q;
        c = 0; q.underlying_id = require_id(f[c]);
        c = 1; q.quote_date = Date::parse(f[c]);
        c = 2; q.expiry_date = Date::parse(f[c]);
        if (!(q.expiry_date > q.quote_date)) throw std::invalid_argument("expiry_date must be after quote_date");
        c = 3; q.strike = csv::parse_double(f[c]);
        if (!(q.strike > 0.0)) throw std::invalid_argument("strike must be > 0");
        c = 4; q.right = parse_right(f[c]);
        c = 5; q.bid = non_negative(csv::parse_double(f[c]), "bid");
        c = 6; q.ask = non_negative(csv::parse_double(f[c]), "ask");
        c = 7; q.volume = static_cast<long long>(non_negative(static_cast<double>(csv::parse_int(f[c])), "volume"));
        c = 8; q.open_interest = static_cast<long long>(non_negative(static_cast<double>(csv::parse_int(f[c])), "open_interest"));
        c = 9; q.implied_vol = csv::parse_optional_double(f[c]);
        c = 10; q.delta = csv::parse_optional_double(f[c]);
        return q;
    });
}

LoadResult<StockRecord> load_stock_csv(const std::filesystem::path& path) {
    return load_rows<StockRecord>(path, kStockHeader, [](const std::vector<std::string_view>& f, std::size_t& c) {
        StockRecord r;
        c = 0; r.stock_id = require_id(f[c]);
        c = 1; r.date = Date::parse(f[c]);
        c = 2; r.excess_return = csv::parse_double(f[c]);
        c = 3; r.price = csv::parse_double(f[c]);
        c = 4; r.market_cap = csv::parse_double(f[c]);
        c = 5; r.volume = csv::parse_int(f[c]);
        return r;
    });
}

LoadResult<RateRecord> load_rate_csv(const std::filesystem::path& path) {
    return load_rows<RateRecord>(path, kRateHeader, [](const std::vector<std::string_view>& f, std::size_t& c) {
        RateRecord r;
        c = 0; r.date = Date::parse(f[c]);
        c = 1; r.rate = csv::parse_double(f[c]);
        return r;
    });
}

namespace {
std::string opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string{}; }
}  // namespace

void write_option_csv(std::ostream& out, std::span<const OptionQuote> quotes) {
    out << kOptionHeader << '\n';
    for (const auto& q : quotes) {
        out << q.underlying_id << ',' << q.quote_date.to_string() << ',' << q.expiry_date.to_string() << ','
            << csv::format_double(q.strike) << ',' << (q.right == Right::call ? 'C' : 'P') << ','
            << csv::format_double(q.bid) << ',' << csv::format_double(q.ask) << ',' << q.volume << ','
            << q.open_interest << ',' << opt(q.implied_vol) << ',' << opt(q.delta) << '\n';
    }
}

void write_stock_csv(std::ostream& out, std::span<const StockRecord> records) {
    out << kStockHeader << '\n';
    for (const auto& r : records) {
        out << r.stock_id << ',' << r.date.to_string() << ',' << csv::format_double(r.excess_return) << ','
            << csv::format_double(r.price) << ',' << csv::format_double(r.market_cap) << ',' << r.volume << '\n';
    }
}

void write_rate_csv(std::ostream& out, std::span<const RateRecord> records) {
    out << kRateHeader << '\n';
    for (const auto& r : records) out << r.date.to_string() << ',' << csv::format_double(r.rate) << '\n';
}

RateTable::RateTable(std::span<const RateRecord> records) {
    for (const auto& r : records) rates_[r.date] = r.rate;
}

RateTable RateTable::constant(double rate) {
    RateTable t;
    t.constant_ = rate;
    return t;
}

double RateTable::at(Date d) const {
    if (constant_) return *constant_;
    auto it = rates_.upper_bound(d);
    if (it == rates_.begin()) throw std::out_of_range("no risk-free rate on or before " + d.to_string());
    return std::prev(it)->second;
}

}  // namespace fearfactor::market_data
