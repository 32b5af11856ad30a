#include "fearfactor/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "fearfactor/csv.hpp"
#include "fearfactor/parallel.hpp"
#include "fearfactor/rng.hpp"

namespace fearfactor::synth {

using market_data::OptionQuote;
using market_data::Right;

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct D12 {
    double d1, d2;
};

D12 d12(double spot, double strike, double rate, double vol, double maturity) {
    const double s = vol * std::sqrt(maturity);
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * maturity) / s;
    return {d1, d1 - s};
}

}  // namespace

double bs_call(double spot, double strike, double rate, double vol, double maturity) {
    const auto [d1, d2] = d12(spot, strike, rate, vol, maturity);
    return spot * norm_cdf(d1) - strike * std::exp(-rate * maturity) * norm_cdf(d2);
}

double bs_put(double spot, double strike, double rate, double vol, double maturity) {
    const auto [d1, d2] = d12(spot, strike, rate, vol, maturity);
    return strike * std::exp(-rate * maturity) * norm_cdf(-d2) - spot * norm_cdf(-d1);
}

double bs_call_delta(double spot, double strike, double rate, double vol, double maturity) {
    return norm_cdf(d12(spot, strike, rate, vol, maturity).d1);
}

namespace {

void add_quotes(std::vector<OptionQuote>& out, const std::string& id, Date quote_date, Date expiry, double spot,
                double rate, double vol, const std::vector<double>& strikes, const QuoteStyle& style) {
    const double T = static_cast<double>(expiry - quote_date) / 365.0;
    for (double k : strikes) {
        const double call_delta = bs_call_delta(spot, k, rate, vol, T);
        for (Right right : {Right::put, Right::call}) {
            const double mid = right == Right::call ? bs_call(spot, k, rate, vol, T) : bs_put(spot, k, rate, vol, T);
            const double half = std::min(std::max(style.half_spread * mid, style.tick), 0.5 * mid);
            OptionQuote q;
            q.underlying_id = id;
            q.quote_date = quote_date;
            q.expiry_date = expiry;
            q.strike = k;
            q.right = right;
            q.bid = mid - half;
            q.ask = mid + half;
            q.volume = style.volume;
            q.open_interest = style.open_interest;
            q.implied_vol = vol;
            q.delta = right == Right::call ? call_delta : call_delta - 1.0;
            out.push_back(std::move(q));
        }
    }
}

}  // namespace

market_data::OptionChain bs_chain(double spot, double rate, double vol, int days_to_expiry, double strike_lo,
                                  double strike_hi, double step, const QuoteStyle& style,
                                  const std::string& underlying_id, Date quote_date) {
    if (!(vol > 0.0)) throw std::invalid_argument("bs_chain: vol must be positive");
    if (!(step > 0.0)) throw std::invalid_argument("bs_chain: step must be positive");
    if (days_to_expiry <= 0) throw std::invalid_argument("bs_chain: expiry must follow the quote date");
    std::vector<double> strikes;
    const auto n = static_cast<long>(std::floor((strike_hi - strike_lo) / step + 1e-9)) + 1;
    for (long i = 0; i < n; ++i) {
        const double k = strike_lo + static_cast<double>(i) * step;
        if (k > 0.0) strikes.push_back(k);
    }
    if (strikes.size() < 4) throw std::invalid_argument("bs_chain: fewer than 4 strikes on the grid");
    market_data::OptionChain chain;
    chain.underlying_id = underlying_id;
    chain.quote_date = quote_date;
    chain.expiry_date = quote_date + days_to_expiry;
    chain.spot = spot;
    chain.risk_free_rate = rate;
    add_quotes(chain.quotes, underlying_id, chain.quote_date, chain.expiry_date, spot, rate, vol, strikes, style);
    return chain;
}

FactorPanel factor_panel(const FactorPanelSpec& spec) {
    if (spec.n_firms < 2) throw std::invalid_argument("factor_panel: need at least 2 firms");
    if (spec.shares.empty() || spec.shares.size() > 2)
        throw std::invalid_argument("factor_panel: one or two factors are supported");
    const auto T = static_cast<Eigen::Index>(spec.n_days);
    const auto N = static_cast<Eigen::Index>(spec.n_firms);
    const auto K = static_cast<Eigen::Index>(spec.shares.size());
    FactorPanel out;
    out.true_factors.resize(T, K);
    out.loadings.resize(N, K);
    const double innov = std::sqrt(1.0 - spec.ar * spec.ar);
    for (Eigen::Index k = 0; k < K; ++k) {
        CounterRng rng(spec.seed, 100 + static_cast<std::uint64_t>(k));
        double f = rng.normal();
        for (Eigen::Index t = 0; t < T; ++t) {
            if (t > 0) f = spec.ar * f + innov * rng.normal();
            out.true_factors(t, k) = f;
        }
        const double scale = std::sqrt(spec.shares[static_cast<std::size_t>(k)]);
        for (Eigen::Index i = 0; i < N; ++i) out.loadings(i, k) = scale * (k == 0 || i % 2 == 0 ? 1.0 : -1.0);
    }
    out.panel = out.true_factors * out.loadings.transpose();
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t i) {
        const auto col = static_cast<Eigen::Index>(i);
        CounterRng noise(spec.seed, 10'000 + i);
        CounterRng mask(spec.seed, 5'000'000 + i);
        for (Eigen::Index t = 0; t < T; ++t) {
            if (spec.noise_sd > 0.0) out.panel(t, col) += spec.noise_sd * noise.normal();
            if (spec.mask_rate > 0.0 && mask.uniform() < spec.mask_rate) out.panel(t, col) = kMissing;
        }
    });
    return out;
}

namespace {

struct Field {
    const char* key;
    double MarketSpec::*real = nullptr;
    int MarketSpec::*integer = nullptr;
};

constexpr Field kFields[] = {
    {"n_stocks", nullptr, &MarketSpec::n_stocks},
    {"n_option_firms", nullptr, &MarketSpec::n_option_firms},
    {"n_days", nullptr, &MarketSpec::n_days},
    {"premium_pct", &MarketSpec::premium_pct},
    {"beta_spread", &MarketSpec::beta_spread},
    {"fear_ar", &MarketSpec::fear_ar},
    {"fear_return_vol", &MarketSpec::fear_return_vol},
    {"idio_vol", &MarketSpec::idio_vol},
    {"market_vol", &MarketSpec::market_vol},
    {"market_premium", &MarketSpec::market_premium},
    {"style_vol", &MarketSpec::style_vol},
    {"style_beta_spread", &MarketSpec::style_beta_spread},
    {"var_noise", &MarketSpec::var_noise},
    {"rate", &MarketSpec::rate},
    {"strike_steps", nullptr, &MarketSpec::strike_steps},
    {"strike_width", &MarketSpec::strike_width},
};

}  // namespace

std::string to_key_values(const MarketSpec& spec) {
    std::ostringstream out;
    out << "seed=" << spec.seed << '\n' << "start=" << spec.start.to_string() << '\n';
    for (const auto& f : kFields) {
        out << f.key << '=';
        if (f.real)
            out << csv::format_double(spec.*f.real);
        else
            out << spec.*f.integer;
        out << '\n';
    }
    out << "half_spread=" << csv::format_double(spec.quotes.half_spread) << '\n'
        << "tick=" << csv::format_double(spec.quotes.tick) << '\n';
    return out.str();
}

MarketSpec market_spec_from_key_values(const std::map<std::string, std::string>& kv) {
    MarketSpec spec;
    for (const auto& [key, value] : kv) {
        if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(csv::parse_int(value));
        } else if (key == "start") {
            spec.start = Date::parse(value);
        } else if (key == "half_spread") {
            spec.quotes.half_spread = csv::parse_double(value);
        } else if (key == "tick") {
            spec.quotes.tick = csv::parse_double(value);
        } else {
            auto it = std::find_if(std::begin(kFields), std::end(kFields),
                                   [&](const Field& f) { return key == f.key; });
            if (it == std::end(kFields)) throw std::invalid_argument("unknown synthetic market key: " + key);
            if (it->real)
                spec.*(it->real) = csv::parse_double(value);
            else
                spec.*(it->integer) = static_cast<int>(csv::parse_int(value));
        }
    }
    if (spec.n_stocks < 1 || spec.n_option_firms < 0 || spec.n_option_firms > spec.n_stocks || spec.n_days < 2 ||
        spec.strike_steps < 2 || !(spec.strike_width > 0.0))
        throw std::invalid_argument("synthetic market settings out of range");
    return spec;
}

std::vector<Date> weekday_calendar(Date start, int n) {
    std::vector<Date> days;
    Date d = start;
    while (static_cast<int>(days.size()) < n) {
        const unsigned wd = d.weekday();
        if (wd != 0 && wd != 6) days.push_back(d);
        d = d + 1;
    }
    return days;
}

namespace {

std::vector<double> ar1_path(CounterRng rng, double ar, std::size_t n, std::vector<double>* shocks) {
    std::vector<double> x(n);
    const double innov = std::sqrt(1.0 - ar * ar);
    for (std::size_t t = 0; t < n; ++t) {
        const double e = rng.normal();
        x[t] = t == 0 ? e : ar * x[t - 1] + innov * e;
        if (shocks) shocks->push_back(e);
    }
    return x;
}

std::string stock_name(int i) {
    std::string s = std::to_string(i + 1);
    return "S" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

double cents(double v) { return std::round(v * 100.0) / 100.0; }

// The two weekly (Friday) expiries closest to 30 calendar days, ties to the longer.
std::vector<Date> expiries_near_30(Date day) {
    int delta = (5 - static_cast<int>(day.weekday()) + 7) % 7;
    if (delta == 0) delta = 7;
    std::vector<Date> c;
    for (int k = 0; k < 8; ++k) c.push_back(day + delta + 7 * k);
    std::stable_sort(c.begin(), c.end(), [&](Date a, Date b) {
        const int da = std::abs((a - day) - 30);
        const int db = std::abs((b - day) - 30);
        return da != db ? da < db : b < a;
    });
    c.resize(2);
    std::sort(c.begin(), c.end());
    return c;
}

struct Underlying {
    std::string id;
    const std::vector<double>* spot;
    double base_var;
    double load;
    double noise;
    double floor;
    const std::vector<double>* driver;
    CounterRng rng;
};

std::vector<OptionQuote> option_history(Underlying u, const std::vector<Date>& days, const MarketSpec& spec) {
    std::vector<OptionQuote> out;
    const double width = spec.strike_width * std::sqrt(u.base_var) * std::sqrt(30.0 / 365.0);
    std::vector<double> strikes;
    for (std::size_t t = 0; t < days.size(); ++t) {
        const double var = std::max(u.base_var + u.load * (*u.driver)[t] + u.noise * u.rng.normal(), u.floor);
        const double spot = (*u.spot)[t];
        const double step = std::max(0.01, cents(width * spot));
        const double center = std::round(spot / step) * step;
        strikes.clear();
        for (int j = -spec.strike_steps; j <= spec.strike_steps; ++j) {
            const double k = cents(center + j * step);
            if (k > 0.0 && (strikes.empty() || k > strikes.back())) strikes.push_back(k);
        }
        for (Date e : expiries_near_30(days[t]))
            add_quotes(out, u.id, days[t], e, spot, spec.rate, std::sqrt(var), strikes, spec.quotes);
    }
    return out;
}

}  // namespace

SyntheticMarket priced_cross_section(const MarketSpec& spec) {
    if (spec.n_stocks < 1 || spec.n_option_firms < 0 || spec.n_option_firms > spec.n_stocks || spec.n_days < 2)
        throw std::invalid_argument("priced_cross_section: settings out of range");
    SyntheticMarket m;
    m.days = weekday_calendar(spec.start, spec.n_days);
    const std::size_t T = m.days.size();
    const double rf_daily = spec.rate / 252.0;

    m.fear = ar1_path(CounterRng(spec.seed, 1), spec.fear_ar, T, &m.fear_shock);
    std::vector<double> mkt(T);
    {
        CounterRng rng(spec.seed, 2);
        for (auto& v : mkt) v = spec.market_premium + spec.market_vol * rng.normal();
    }
    std::vector<std::array<double, 5>> style(T);
    {
        CounterRng rng(spec.seed, 5);
        for (auto& h : style)
            for (auto& v : h) v = spec.style_vol * rng.normal();
    }
    const auto market_fear = ar1_path(CounterRng(spec.seed, 3), spec.fear_ar, T, nullptr);
    std::vector<double> index_level(T);
    double level = 1000.0;
    for (std::size_t t = 0; t < T; ++t) index_level[t] = level *= 1.0 + mkt[t] + rf_daily;

    const auto n = static_cast<std::size_t>(spec.n_stocks);
    std::vector<std::vector<market_data::StockRecord>> per_stock(n);
    std::vector<std::vector<double>> prices(n);
    m.truth.stock_ids.resize(n);
    m.truth.fear_beta.resize(n);
    m.truth.market_beta.resize(n);
    m.truth.style_beta.resize(n);
    m.truth.expected_return.resize(n);
    parallel_for(n, [&](std::size_t i) {
        CounterRng rng(spec.seed, 1000 + i);
        const std::string id = stock_name(static_cast<int>(i));
        const double b = rng.uniform(-spec.beta_spread, spec.beta_spread);
        const double mb = rng.uniform(0.8, 1.2);
        double price = std::exp(std::log(20.0) + 0.8 * rng.normal());
        const double shares = std::exp(std::log(5e7) + rng.normal());
        const double mu = mb * spec.market_premium + b * spec.premium_pct / 100.0 / 21.0;
        m.truth.stock_ids[i] = id;
        m.truth.fear_beta[i] = b;
        m.truth.market_beta[i] = mb;
        CounterRng style_rng(spec.seed, 200'000 + i);
        auto& s = m.truth.style_beta[i];
        for (auto& v : s) v = style_rng.uniform(-spec.style_beta_spread, spec.style_beta_spread);
        m.truth.expected_return[i] = mu;
        auto& recs = per_stock[i];
        recs.reserve(T);
        prices[i].reserve(T);
        for (std::size_t t = 0; t < T; ++t) {
            double r = mu + b * spec.fear_return_vol * m.fear_shock[t] + mb * (mkt[t] - spec.market_premium) +
                       spec.idio_vol * rng.normal();
            for (std::size_t k = 0; k < 5; ++k) r += s[k] * style[t][k];
            price *= 1.0 + r + rf_daily;
            const auto volume = std::llround(std::exp(std::log(1e5) + 0.5 * rng.normal()));
            recs.push_back({id, m.days[t], r, price, price * shares, volume});
            prices[i].push_back(price);
        }
    });
    for (auto& recs : per_stock) m.stocks.insert(m.stocks.end(), recs.begin(), recs.end());

    const auto n_opt = static_cast<std::size_t>(spec.n_option_firms);
    std::vector<std::vector<OptionQuote>> per_underlying(n_opt + 1);
    parallel_for(n_opt + 1, [&](std::size_t j) {
        if (j < n_opt) {
            CounterRng rng(spec.seed, 100'000 + j);
            const double base = rng.uniform(0.06, 0.14);
            const double load = rng.uniform(0.01, 0.03);
            per_underlying[j] = option_history(
                {m.truth.stock_ids[j], &prices[j], base, load, spec.var_noise, 0.01, &m.fear, rng}, m.days, spec);
        } else {
            CounterRng rng(spec.seed, 99'999);
            per_underlying[j] = option_history(
                {kIndexId, &index_level, 0.03, 0.01, 0.002, 0.002, &market_fear, rng}, m.days, spec);
        }
    });
    for (auto& q : per_underlying) {
        m.options.insert(m.options.end(), std::make_move_iterator(q.begin()), std::make_move_iterator(q.end()));
        std::vector<OptionQuote>().swap(q);
    }

    for (Date d : m.days) m.rates.push_back({d, spec.rate});

    m.ff.names = {"mkt_rf", "smb", "hml", "rmw", "cma", "mom", "rf"};
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < T;) {
        std::size_t j = i;
        std::array<double, 6> g{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
        for (; j < T && m.days[j].month_index() == m.days[i].month_index(); ++j) {
            g[0] *= 1.0 + mkt[j];
            for (std::size_t k = 0; k < 5; ++k) g[k + 1] *= 1.0 + style[j][k];
        }
        std::vector<double> row;
        for (double v : g) row.push_back(v - 1.0);
        row.push_back(spec.rate / 12.0);
        m.ff.dates.push_back(m.days[j - 1]);
        rows.push_back(std::move(row));
        i = j;
    }
    m.ff.values.resize(static_cast<Eigen::Index>(rows.size()), 7);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < 7; ++c)
            m.ff.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

void write_market(const std::filesystem::path& dir, const SyntheticMarket& market, const MarketSpec& spec) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw csv::FileError("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("options.csv");
        market_data::write_option_csv(f, market.options);
    }
    {
        auto f = open("stocks.csv");
        market_data::write_stock_csv(f, market.stocks);
    }
    {
        auto f = open("rates.csv");
        market_data::write_rate_csv(f, market.rates);
    }
    {
        auto f = open("ff_factors.csv");
        portfolio::write_ff_csv(f, market.ff);
    }
    {
        auto f = open("truth.csv");
        f << "stock_id,fear_beta,market_beta,expected_return,smb_beta,hml_beta,rmw_beta,cma_beta,mom_beta\n";
        for (std::size_t i = 0; i < market.truth.stock_ids.size(); ++i) {
            f << market.truth.stock_ids[i] << ',' << csv::format_double(market.truth.fear_beta[i]) << ','
              << csv::format_double(market.truth.market_beta[i]) << ','
              << csv::format_double(market.truth.expected_return[i]);
            for (double v : market.truth.style_beta[i]) f << ',' << csv::format_double(v);
            f << '\n';
        }
    }
    {
        auto f = open("synth_spec.txt");
        f << to_key_values(spec);
    }
}

}  // namespace fearfactor::synth
