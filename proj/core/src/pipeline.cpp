#include "fearfactor/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fearfactor/csv.hpp"
#include "fearfactor/parallel.hpp"
#include "fearfactor/report.hpp"

namespace fearfactor::pipeline {

namespace fs = std::filesystem;
using cross_section::DatedMatrix;

fs::path RunConfig::options_path() const { return options.empty() ? data_dir / "options.csv" : options; }
fs::path RunConfig::stocks_path() const { return stocks.empty() ? data_dir / "stocks.csv" : stocks; }
fs::path RunConfig::rates_path() const { return rates.empty() ? data_dir / "rates.csv" : rates; }
fs::path RunConfig::ff_path() const { return ff.empty() ? data_dir / "ff_factors.csv" : ff; }

namespace {

struct Key {
    const char* name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

int to_int(const std::string& key, const std::string& v) {
    try {
        return static_cast<int>(csv::parse_int(v));
    } catch (const std::invalid_argument&) {
        throw ValidationError("config " + key + ": expected an integer, got '" + v + "'");
    }
}

double to_real(const std::string& key, const std::string& v) {
    try {
        return csv::parse_double(v);
    } catch (const std::invalid_argument&) {
        throw ValidationError("config " + key + ": expected a number, got '" + v + "'");
    }
}

#define FF_INT(field) \
    Key { #field, [](RunConfig& c, const std::string& v) { c.field = to_int(#field, v); }, \
          [](const RunConfig& c) { return std::to_string(c.field); } }
#define FF_REAL(field) \
    Key { #field, [](RunConfig& c, const std::string& v) { c.field = to_real(#field, v); }, \
          [](const RunConfig& c) { return csv::format_double(c.field); } }
#define FF_TEXT(field) \
    Key { #field, [](RunConfig& c, const std::string& v) { c.field = v; }, [](const RunConfig& c) { return c.field; } }
#define FF_PATH(field) \
    Key { #field, [](RunConfig& c, const std::string& v) { c.field = v; }, \
          [](const RunConfig& c) { return c.field.string(); } }

const std::vector<Key>& keys() {
    static const std::vector<Key> k = {
        FF_PATH(data_dir), FF_PATH(options), FF_PATH(stocks), FF_PATH(rates), FF_PATH(ff), FF_PATH(out_dir),
        FF_INT(min_days), FF_INT(max_days), FF_INT(min_quotes), FF_INT(factor_window), FF_REAL(min_coverage),
        FF_INT(beta_window), FF_INT(beta_min_obs), FF_INT(n_quantiles), FF_INT(n_control_quantiles),
        FF_INT(n_test_assets), FF_INT(nw_lags),
        Key{"families",
            [](RunConfig& c, const std::string& v) {
                c.families.clear();
                for (auto f : csv::split(v))
                    if (!f.empty()) c.families.emplace_back(f);
            },
            [](const RunConfig& c) {
                std::string s;
                for (const auto& f : c.families) s += (s.empty() ? "" : ",") + f;
                return s;
            }},
        FF_TEXT(beta_control), FF_TEXT(sort_scheme), FF_TEXT(sort_control), FF_TEXT(weighting), FF_TEXT(index_id),
        FF_INT(n_latent),
        Key{"seed", [](RunConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(to_int("seed", v)); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
        Key{"allow_bad_rows",
            [](RunConfig& c, const std::string& v) {
                if (v == "true" || v == "1")
                    c.allow_bad_rows = true;
                else if (v == "false" || v == "0")
                    c.allow_bad_rows = false;
                else
                    throw ValidationError("config allow_bad_rows: expected true or false");
            },
            [](const RunConfig& c) { return std::string(c.allow_bad_rows ? "true" : "false"); }},
    };
    return k;
}

#undef FF_INT
#undef FF_REAL
#undef FF_TEXT
#undef FF_PATH

}  // namespace

void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : keys())
        if (key == k.name) {
            k.set(cfg, value);
            return;
        }
    throw ValidationError("unknown config key '" + key + "'");
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : keys()) out.emplace_back(k.name);
    return out;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
    std::vector<std::string> lines;
    try {
        lines = csv::read_lines(path);
    } catch (const csv::FileError& e) {
        throw ValidationError(e.what());
    }
    std::map<std::string, std::string> kv;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos || eq == 0)
            throw ValidationError(path.string() + ":" + std::to_string(i + 1) + ": expected key=value");
        auto trim = [](std::string_view s) {
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
            return std::string(s);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

RunConfig load_config(const fs::path& path) {
    RunConfig cfg;
    for (const auto& [k, v] : read_key_values(path)) {
        try {
            apply(cfg, k, v);
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ": " + e.what());
        }
    }
    return cfg;
}

std::string to_key_values(const RunConfig& cfg) {
    std::string s;
    for (const auto& k : keys()) s += std::string(k.name) + "=" + k.get(cfg) + "\n";
    return s;
}

void validate(const RunConfig& cfg) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ValidationError("invalid config: " + what);
    };
    require(cfg.min_days > 0 && cfg.min_days <= cfg.max_days, "min_days must be positive and at most max_days");
    require(cfg.min_quotes >= 2, "min_quotes must be at least 2");
    require(cfg.factor_window >= 10, "factor_window must be at least 10");
    require(cfg.min_coverage > 0.0 && cfg.min_coverage <= 1.0, "min_coverage must lie in (0, 1]");
    require(cfg.beta_window >= 3 && cfg.beta_min_obs >= 3 && cfg.beta_min_obs <= cfg.beta_window,
            "beta_min_obs must lie in [3, beta_window]");
    require(cfg.n_quantiles >= 2 && cfg.n_control_quantiles >= 2 && cfg.n_test_assets >= 3,
            "quantile counts too small");
    require(cfg.nw_lags >= 0, "nw_lags must be non-negative");
    require(!cfg.families.empty(), "families must not be empty");
    for (const auto& f : cfg.families) {
        try {
            const auto name = factors::factor_name_from_string(f);
            require(name == factors::FactorName::CF || name == factors::FactorName::CF_plus ||
                        name == factors::FactorName::CF_minus,
                    "families must be CF, CF_plus or CF_minus");
        } catch (const std::invalid_argument&) {
            throw ValidationError("invalid config: unknown family '" + f + "'");
        }
    }
    require(cfg.beta_control == "none" || cfg.beta_control == "vix" || cfg.beta_control == "mf",
            "beta_control must be none, vix or mf");
    try {
        const auto scheme = portfolio::scheme_from_string(cfg.sort_scheme);
        const auto control = portfolio::control_source_from_string(cfg.sort_control);
        require(scheme == portfolio::Scheme::single || control != portfolio::ControlSource::none,
                "two-way sort schemes need a sort_control");
        require(control != portfolio::ControlSource::beta_control || scheme == portfolio::Scheme::single ||
                    cfg.beta_control != "none",
                "sort_control=beta_control needs beta_control other than none");
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("invalid config: ") + e.what());
    }
    require(cfg.weighting == "value" || cfg.weighting == "equal", "weighting must be value or equal");
    require(cfg.n_latent >= 0, "n_latent must be non-negative");
}

std::string to_string(Stage s) {
    switch (s) {
        case Stage::ingest: return "ingest";
        case Stage::iv: return "iv";
        case Stage::factors: return "factors";
        case Stage::betas: return "betas";
        case Stage::sort: return "sort";
        case Stage::fmb: return "fmb";
        case Stage::threepass: return "threepass";
    }
    return "ingest";
}

IvResult compute_iv(std::span<const market_data::OptionQuote> quotes, std::span<const market_data::StockRecord> stocks,
                    const market_data::RateTable& rates, const RunConfig& cfg) {
    const market_data::FilterOptions opts{cfg.min_days, cfg.max_days, static_cast<std::size_t>(cfg.min_quotes)};
    std::map<std::pair<std::string, Date>, double> spot;
    for (const auto& s : stocks) spot[{s.stock_id, s.date}] = s.price;

    const auto groups = market_data::select_expiries(quotes, opts);
    std::vector<ChainRecord> records(groups.size());
    std::vector<std::optional<implied_variance::VarianceObservation>> obs(groups.size());
    parallel_for(groups.size(), [&](std::size_t g) {
        const auto& grp = groups[g];
        market_data::ChainMeta meta{grp.underlying_id, grp.quote_date, grp.expiry_date, kMissing, 0.0};
        if (auto it = spot.find({grp.underlying_id, grp.quote_date}); it != spot.end()) meta.spot = it->second;
        try {
            meta.risk_free_rate = rates.at(grp.quote_date);
        } catch (const std::out_of_range&) {
            throw ValidationError("no risk-free rate on or before " + grp.quote_date.to_string());
        }
        auto& rec = records[g];
        rec.underlying_id = grp.underlying_id;
        rec.quote_date = grp.quote_date;
        rec.expiry_date = grp.expiry_date;
        rec.spot = meta.spot;
        auto result = market_data::filter_chain(grp.quotes, meta, opts);
        if (auto* chain = std::get_if<market_data::OptionChain>(&result)) {
            rec.forward = chain->forward;
            rec.k0 = chain->k0;
            rec.n_quotes = static_cast<int>(chain->quotes.size());
            rec.status = "ok";
            obs[g] = implied_variance::compute_variance(*chain);
        } else {
            rec.status = market_data::to_string(std::get<market_data::Rejected>(result).reason);
        }
    });
    std::vector<implied_variance::VarianceObservation> kept;
    for (auto& o : obs)
        if (o) kept.push_back(std::move(*o));
    return {implied_variance::build_panel(kept), std::move(records)};
}

const factors::FactorSeries& FactorResult::get(const std::string& name) const {
    for (const auto& s : series)
        if (s.name == name) return s;
    throw std::out_of_range("factor series " + name + " is not available");
}

FactorResult compute_factors(const implied_variance::VariancePanel& panel, const RunConfig& cfg) {
    using implied_variance::Measure;
    std::vector<std::string> firms;
    for (const auto& f : panel.firms())
        if (f != cfg.index_id) firms.push_back(f);
    if (firms.size() < 2) throw InsufficientData("compute_factors: fewer than two firms in the variance panel");
    const auto firm_panel = panel.select_firms(firms);

    FactorResult out;
    const factors::WindowSpec spec{cfg.factor_window, 1, cfg.min_coverage};
    factors::EmPcaOptions em;
    em.min_coverage = cfg.min_coverage;
    const Measure measures[] = {Measure::total, Measure::good, Measure::bad};
    out.series.resize(3);
    parallel_for(3, [&](std::size_t m) { out.series[m] = factors::rolling_factor(firm_panel, measures[m], spec, em); });
    for (auto m : measures) out.full_sample_explained.push_back(factors::em_pca(firm_panel.matrix(m), em).variance_explained(0));
    out.summary = implied_variance::panel_summary(firm_panel);

    out.ew_levels.dates = firm_panel.dates();
    out.ew_levels.names = {"total", "good", "bad"};
    out.ew_levels.values.resize(static_cast<Eigen::Index>(firm_panel.dates().size()), 3);
    for (Eigen::Index c = 0; c < 3; ++c) {
        const auto x = firm_panel.matrix(measures[c]);
        for (Eigen::Index t = 0; t < x.rows(); ++t) {
            double s = 0.0;
            int n = 0;
            for (Eigen::Index j = 0; j < x.cols(); ++j)
                if (!is_missing(x(t, j))) {
                    s += x(t, j);
                    ++n;
                }
            out.ew_levels.values(t, c) = n > 0 ? s / n : kMissing;
        }
    }

    const std::vector<std::string> index{cfg.index_id};
    const auto idx = panel.select_firms(index);
    if (!idx.firms().empty()) {
        for (auto m : measures) {
            const auto x = idx.matrix(m);
            std::vector<double> levels(x.rows());
            for (Eigen::Index t = 0; t < x.rows(); ++t) levels[static_cast<std::size_t>(t)] = x(t, 0);
            out.series.push_back(
                factors::series_from_levels(factors::to_string(factors::factor_for(m, true)), idx.dates(), levels));
        }
    }
    return out;
}

namespace {

std::string market_counterpart(const std::string& family) {
    if (family == "CF") return "MF";
    if (family == "CF_plus") return "MF_plus";
    return "MF_minus";
}

Eigen::Index measure_column(const std::string& family) {
    if (family == "CF") return 0;
    if (family == "CF_plus") return 1;
    return 2;
}

std::vector<double> by_month(const DatedSeries& s, const std::vector<Date>& months) {
    std::map<int, double> m;
    for (std::size_t i = 0; i < s.size(); ++i) m[s.dates[i].month_index()] = s.values[i];
    std::vector<double> out;
    for (Date d : months) {
        auto it = m.find(d.month_index());
        out.push_back(it == m.end() ? kMissing : it->second);
    }
    return out;
}

DatedMatrix panel_matrix(const portfolio::PortfolioReturnPanel& p, const std::string& prefix) {
    DatedMatrix m;
    m.dates = p.dates;
    const int width = p.labels.size() >= 10 ? 2 : 1;
    for (std::size_t j = 0; j < p.labels.size(); ++j) {
        std::string n = std::to_string(j + 1);
        m.names.push_back(prefix + std::string(width - std::min<std::size_t>(width, n.size()), '0') + n);
    }
    m.values = p.returns;
    return m;
}

const factors::FactorSeries& find_series(const std::vector<factors::FactorSeries>& series, const std::string& name) {
    for (const auto& s : series)
        if (s.name == name) return s;
    throw std::runtime_error("factor series " + name + " is not available (index options missing?)");
}

}  // namespace

std::map<std::string, exposures::BetaRun> compute_betas(std::span<const exposures::StockReturns> returns,
                                                        const std::vector<factors::FactorSeries>& series,
                                                        const RunConfig& cfg) {
    std::map<std::string, exposures::BetaRun> out;
    const exposures::BetaOptions opts{static_cast<std::size_t>(cfg.beta_window),
                                      static_cast<std::size_t>(cfg.beta_min_obs)};
    for (const auto& fam : cfg.families) {
        const auto& f = find_series(series, fam);
        std::optional<exposures::NamedSeries> control;
        if (cfg.beta_control != "none") {
            const auto name = cfg.beta_control == "vix" ? std::string("MF") : market_counterpart(fam);
            control = exposures::NamedSeries{name, find_series(series, name).innovation_series()};
        }
        out[fam] = exposures::estimate_betas(returns, {fam, f.innovation_series()}, control, opts);
    }
    return out;
}

const FamilySort& SortResult::get(const std::string& family) const {
    for (const auto& f : families)
        if (f.family == family) return f;
    throw std::out_of_range("no sort results for " + family);
}

SortResult compute_sorts(std::span<const market_data::StockRecord> stocks,
                         const std::map<std::string, exposures::BetaRun>& betas,
                         const std::vector<factors::FactorSeries>& series, const DatedMatrix& ew_levels,
                         const portfolio::FactorTable& ff, const RunConfig& cfg) {
    const auto monthly = portfolio::monthly_panel(stocks);
    const auto returns = exposures::group_returns(stocks);
    std::set<Date> day_set;
    for (const auto& s : stocks) day_set.insert(s.date);
    const std::vector<Date> days(day_set.begin(), day_set.end());

    const auto weighting = cfg.weighting == "equal" ? portfolio::Weighting::equal : portfolio::Weighting::value;
    const auto scheme = portfolio::scheme_from_string(cfg.sort_scheme);
    const portfolio::SortSpec quint{cfg.n_quantiles, weighting, portfolio::Scheme::single, cfg.n_control_quantiles};
    const portfolio::SortSpec dec{cfg.n_test_assets, weighting, portfolio::Scheme::single, cfg.n_control_quantiles};
    const portfolio::SortSpec configured{cfg.n_quantiles, weighting, scheme, cfg.n_control_quantiles};
    const std::vector<std::string> ff_names{"mkt_rf", "smb", "hml", "rmw", "cma", "mom"};

    SortResult out;
    std::vector<report::SortSummary> summaries;
    for (const auto& fam : cfg.families) {
        auto it = betas.find(fam);
        if (it == betas.end()) throw std::runtime_error("no betas for family " + fam);
        FamilySort fs;
        fs.family = fam;
        const auto formations =
            portfolio::build_formations(monthly, it->second.estimates, portfolio::ControlSource::none);
        fs.quintiles = portfolio::sort_portfolios(formations, quint);
        fs.deciles = portfolio::sort_portfolios(formations, dec);
        if (scheme == portfolio::Scheme::single) {
            fs.scheme = fs.quintiles;
        } else {
            const auto controlled = portfolio::build_formations(
                monthly, it->second.estimates, portfolio::control_source_from_string(cfg.sort_control));
            fs.scheme = portfolio::sort_portfolios(controlled, configured);
        }
        fs.assets = panel_matrix(fs.deciles, "d");

        DatedMatrix base{days, {}, portfolio::daily_bucket_returns(fs.quintiles, returns, days)};
        base.names = panel_matrix(fs.quintiles, "q").names;
        const auto& factor = find_series(series, fam);
        fs.mimic = cross_section::mimicking_portfolio(fam, factor.innovation_series(), base);

        const auto& months = fs.mimic.monthly_returns.dates;
        fs.pricing.dates = months;
        fs.pricing.names = {"mimic", "innov", "ew"};
        for (const auto& n : ff_names) fs.pricing.names.push_back(n);
        fs.pricing.values.resize(static_cast<Eigen::Index>(months.size()),
                                 static_cast<Eigen::Index>(fs.pricing.names.size()));
        std::vector<std::vector<double>> cols;
        cols.push_back(fs.mimic.monthly_returns.values);
        cols.push_back(by_month(factors::monthly_innovations(factor), months));
        const auto ew = factors::series_from_levels("ew", ew_levels.dates,
                                                    ew_levels.series(measure_column(fam)).values);
        cols.push_back(by_month(factors::monthly_innovations(ew), months));
        for (const auto& n : ff_names) {
            const auto c = ff.column(n);
            DatedSeries s{ff.dates, std::vector<double>(ff.dates.size())};
            for (std::size_t r = 0; r < ff.dates.size(); ++r) s.values[r] = ff.values(static_cast<Eigen::Index>(r), c);
            cols.push_back(by_month(s, months));
        }
        for (std::size_t c = 0; c < cols.size(); ++c)
            for (std::size_t r = 0; r < months.size(); ++r)
                fs.pricing.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cols[c][r];

        summaries.push_back(report::summarize_sort(fam, fs.scheme, ff, cfg.nw_lags));
        out.families.push_back(std::move(fs));
    }
    out.table3 = report::table3(summaries);
    return out;
}

namespace {

using AssetsAndPricing = std::map<std::string, std::pair<DatedMatrix, DatedMatrix>>;

DatedMatrix select_columns(const DatedMatrix& m, const std::vector<std::string>& cols,
                           const std::vector<std::string>& rename) {
    DatedMatrix out{m.dates, rename, Eigen::MatrixXd(m.values.rows(), static_cast<Eigen::Index>(cols.size()))};
    for (std::size_t c = 0; c < cols.size(); ++c) out.values.col(static_cast<Eigen::Index>(c)) = m.values.col(m.column(cols[c]));
    return out;
}

const std::pair<DatedMatrix, DatedMatrix>& family_inputs(const AssetsAndPricing& in, const std::string& fam) {
    auto it = in.find(fam);
    if (it == in.end()) throw std::runtime_error("no test assets for family " + fam);
    return it->second;
}

}  // namespace

PricingResult compute_fmb(const AssetsAndPricing& assets_and_pricing, const RunConfig& cfg) {
    PricingResult out;
    std::vector<std::pair<std::string, cross_section::RiskPremiumEstimate>> columns;
    for (const auto& fam : cfg.families) {
        const auto& [assets, pricing] = family_inputs(assets_and_pricing, fam);
        const std::vector<std::pair<std::string, std::vector<std::string>>> specs{
            {"ff5", {"mimic", "mkt_rf", "smb", "hml", "rmw", "cma"}}, {"mkt", {"mimic", "mkt_rf"}}};
        for (const auto& [tag, cols] : specs) {
            const std::string id = "fmb_" + fam + "_" + tag;
            auto names = cols;
            names[0] = fam;
            try {
                const auto e = cross_section::fama_macbeth(assets, select_columns(pricing, cols, names), cfg.nw_lags);
                for (auto& r : cross_section::premium_rows(e, id)) out.rows.push_back(std::move(r));
                columns.emplace_back(id, e);
            } catch (const std::exception& ex) {
                out.warnings.push_back(id + ": " + ex.what());
            }
        }
    }
    out.table = report::table6(columns);
    return out;
}

PricingResult compute_three_pass(const AssetsAndPricing& assets_and_pricing, const RunConfig& cfg) {
    PricingResult out;
    std::vector<std::pair<std::string, cross_section::ThreePassResult>> columns;
    cross_section::ThreePassOptions opts;
    if (cfg.n_latent > 0) opts.n_latent = cfg.n_latent;
    opts.nw_lags = cfg.nw_lags;
    for (const auto& fam : cfg.families) {
        const auto& [assets, pricing] = family_inputs(assets_and_pricing, fam);
        const auto market = pricing.series(pricing.column("mkt_rf"));
        for (const std::string obs : {"mimic", "innov", "ew"}) {
            const std::string id = "3pass_" + fam + "_" + obs;
            try {
                auto r = cross_section::three_pass(assets, pricing.series(pricing.column(obs)), market, opts);
                r.factor_name = fam;
                for (auto& row : cross_section::premium_rows(r, id)) out.rows.push_back(std::move(row));
                columns.emplace_back(id, r);
            } catch (const std::exception& ex) {
                out.warnings.push_back(id + ": " + ex.what());
            }
        }
    }
    out.table = report::table9(columns);
    return out;
}

PipelineResult run_in_memory(std::span<const market_data::OptionQuote> quotes,
                             std::span<const market_data::StockRecord> stocks, const market_data::RateTable& rates,
                             const portfolio::FactorTable& ff, const RunConfig& cfg) {
    validate(cfg);
    PipelineResult r;
    r.iv = compute_iv(quotes, stocks, rates, cfg);
    r.factors = compute_factors(r.iv.panel, cfg);
    const auto returns = exposures::group_returns(stocks);
    r.betas = compute_betas(returns, r.factors.series, cfg);
    r.sorts = compute_sorts(stocks, r.betas, r.factors.series, r.factors.ew_levels, ff, cfg);
    AssetsAndPricing ap;
    for (const auto& f : r.sorts.families) ap[f.family] = {f.assets, f.pricing};
    r.fmb = compute_fmb(ap, cfg);
    r.three_pass = compute_three_pass(ap, cfg);
    return r;
}

namespace {

/// Collects a stage's outputs as temporary files and publishes them together.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
    Outputs(const Outputs&) = delete;
    Outputs& operator=(const Outputs&) = delete;
    ~Outputs() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& [tmp, final] : files_) fs::remove(tmp, ec);
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const fs::path final = dir_ / name;
        const fs::path tmp = dir_ / (name + ".tmp");
        files_.emplace_back(tmp, final);
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        body(out);
        out.flush();
        if (!out) throw std::runtime_error("failed writing " + tmp.string());
    }

    std::vector<fs::path> commit() {
        std::vector<fs::path> done;
        for (const auto& [tmp, final] : files_) {
            fs::rename(tmp, final);
            done.push_back(final);
        }
        committed_ = true;
        return done;
    }

private:
    fs::path dir_;
    std::vector<std::pair<fs::path, fs::path>> files_;
    bool committed_ = false;
};

template <typename T>
std::vector<T> checked(market_data::LoadResult<T> result, const fs::path& path, const RunConfig& cfg,
                       StageReport& report) {
    if (!result.errors.empty()) {
        std::ostringstream msg;
        msg << path.string() << ": " << result.errors.size() << " malformed row(s)";
        for (std::size_t i = 0; i < std::min<std::size_t>(5, result.errors.size()); ++i) {
            const auto& e = result.errors[i];
            msg << "\n  " << path.string() << ":" << e.line << ": " << e.column << ": " << e.reason;
        }
        if (!cfg.allow_bad_rows) throw ValidationError(msg.str());
        report.warnings.push_back(msg.str());
    }
    return std::move(result.records);
}

template <typename F>
auto as_validation(const F& f) -> decltype(f()) {
    try {
        return f();
    } catch (const csv::FileError& e) {
        throw ValidationError(e.what());
    }
}

std::vector<market_data::OptionQuote> load_options(const RunConfig& cfg, StageReport& report) {
    const auto path = cfg.options_path();
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw ValidationError(path.string() + ": no .csv files in directory");
    } else {
        files.push_back(path);
    }
    std::vector<market_data::OptionQuote> all;
    for (const auto& f : files) {
        auto quotes = checked(as_validation([&] { return market_data::load_option_csv(f); }), f, cfg, report);
        all.insert(all.end(), std::make_move_iterator(quotes.begin()), std::make_move_iterator(quotes.end()));
        report.inputs.push_back(f);
    }
    return all;
}

std::vector<market_data::StockRecord> load_stocks(const RunConfig& cfg, StageReport& report) {
    const auto path = cfg.stocks_path();
    report.inputs.push_back(path);
    return checked(as_validation([&] { return market_data::load_stock_csv(path); }), path, cfg, report);
}

market_data::RateTable load_rates(const RunConfig& cfg, StageReport& report) {
    const auto path = cfg.rates_path();
    report.inputs.push_back(path);
    const auto recs = checked(as_validation([&] { return market_data::load_rate_csv(path); }), path, cfg, report);
    return market_data::RateTable(recs);
}

portfolio::FactorTable load_ff(const RunConfig& cfg, StageReport& report) {
    const auto path = cfg.ff_path();
    report.inputs.push_back(path);
    return as_validation([&] { return portfolio::load_ff_csv(path); });
}

fs::path artifact(const RunConfig& cfg, const std::string& name, StageReport& report) {
    const auto p = cfg.out_dir / name;
    if (!fs::exists(p)) throw ValidationError("missing upstream artifact " + p.string());
    report.inputs.push_back(p);
    return p;
}

void write_chains(std::ostream& out, const std::vector<ChainRecord>& chains) {
    out << "underlying_id,quote_date,expiry_date,spot,forward,k0,n_quotes,status\n";
    for (const auto& c : chains)
        out << c.underlying_id << ',' << c.quote_date.to_string() << ',' << c.expiry_date.to_string() << ','
            << csv::format_double(c.spot) << ',' << csv::format_double(c.forward) << ',' << csv::format_double(c.k0)
            << ',' << c.n_quotes << ',' << c.status << '\n';
}

std::vector<factors::FactorSeries> read_series(const RunConfig& cfg, StageReport& report) {
    const auto p = artifact(cfg, "factors.csv", report);
    return as_validation([&] { return factors::read_factors_csv(p); });
}

DatedMatrix read_matrix_artifact(const RunConfig& cfg, const std::string& name, StageReport& report) {
    const auto p = artifact(cfg, name, report);
    return as_validation([&] { return cross_section::read_dated_matrix(p); });
}

std::map<std::string, exposures::BetaRun> read_betas(const RunConfig& cfg, StageReport& report) {
    const auto p = artifact(cfg, "betas.csv", report);
    std::map<std::string, exposures::BetaRun> out;
    for (auto& e : as_validation([&] { return exposures::read_betas_csv(p); }))
        out[e.factor_name].estimates.push_back(std::move(e));
    return out;
}

AssetsAndPricing read_assets_and_pricing(const RunConfig& cfg, StageReport& report) {
    AssetsAndPricing ap;
    for (const auto& fam : cfg.families)
        ap[fam] = {read_matrix_artifact(cfg, "assets_" + fam + ".csv", report),
                   read_matrix_artifact(cfg, "pricing_" + fam + ".csv", report)};
    return ap;
}

/// Replaces the rows whose spec_id starts with `prefix`, keeping other stages' rows;
/// Fama-MacBeth rows always precede three-pass rows.
std::vector<cross_section::PremiumRow> merge_premia(const RunConfig& cfg, const std::string& prefix,
                                                    std::vector<cross_section::PremiumRow> own) {
    std::vector<cross_section::PremiumRow> rows;
    const auto path = cfg.out_dir / "premia.csv";
    if (fs::exists(path))
        for (auto& r : as_validation([&] { return cross_section::read_premia_csv(path); }))
            if (r.spec_id.rfind(prefix, 0) != 0) rows.push_back(std::move(r));
    for (auto& r : own) rows.push_back(std::move(r));
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        auto rank = [](const std::string& s) { return s.rfind("fmb_", 0) == 0 ? 0 : s.rfind("3pass_", 0) == 0 ? 1 : 2; };
        return rank(a.spec_id) < rank(b.spec_id);
    });
    return rows;
}

}  // namespace

StageReport run_stage(Stage stage, const RunConfig& cfg) {
    validate(cfg);
    StageReport report;
    Outputs out(cfg.out_dir);
    switch (stage) {
        case Stage::ingest: {
            const auto quotes = load_options(cfg, report);
            const auto stocks = load_stocks(cfg, report);
            const auto rates = load_rates(cfg, report);
            load_ff(cfg, report);
            const auto iv = compute_iv(quotes, stocks, rates, cfg);
            out.write("chains.csv", [&](std::ostream& o) { write_chains(o, iv.chains); });
            break;
        }
        case Stage::iv: {
            const auto quotes = load_options(cfg, report);
            const auto stocks = load_stocks(cfg, report);
            const auto rates = load_rates(cfg, report);
            const auto iv = compute_iv(quotes, stocks, rates, cfg);
            for (const auto& w : iv.panel.warnings()) report.warnings.push_back(w);
            out.write("variance_panel.csv", [&](std::ostream& o) { implied_variance::write_panel_csv(o, iv.panel); });
            break;
        }
        case Stage::factors: {
            const auto p = artifact(cfg, "variance_panel.csv", report);
            const auto panel = as_validation([&] { return implied_variance::read_panel_csv(p); });
            const auto f = compute_factors(panel, cfg);
            out.write("factors.csv", [&](std::ostream& o) { factors::write_factors_csv(o, f.series); });
            out.write("ew_levels.csv", [&](std::ostream& o) { cross_section::write_dated_matrix(o, f.ew_levels); });
            out.write("table1.txt", [&](std::ostream& o) { o << report::table1(f.summary); });
            std::vector<report::ExplainedColumn> cols;
            for (std::size_t m = 0; m < 3; ++m)
                cols.push_back({f.series[m].name, f.series[m].variance_explained, f.full_sample_explained[m]});
            out.write("table2.txt", [&](std::ostream& o) { o << report::table2(cols); });
            break;
        }
        case Stage::betas: {
            const auto stocks = load_stocks(cfg, report);
            const auto series = read_series(cfg, report);
            const auto runs = compute_betas(exposures::group_returns(stocks), series, cfg);
            std::vector<exposures::ExposureEstimate> all;
            for (const auto& fam : cfg.families) {
                const auto& run = runs.at(fam);
                all.insert(all.end(), run.estimates.begin(), run.estimates.end());
                for (const auto& d : run.diagnostics) report.warnings.push_back(fam + ": " + d);
            }
            out.write("betas.csv", [&](std::ostream& o) { exposures::write_betas_csv(o, all); });
            break;
        }
        case Stage::sort: {
            const auto stocks = load_stocks(cfg, report);
            const auto ff = load_ff(cfg, report);
            const auto betas = read_betas(cfg, report);
            const auto series = read_series(cfg, report);
            const auto ew = read_matrix_artifact(cfg, "ew_levels.csv", report);
            const auto sorts = compute_sorts(stocks, betas, series, ew, ff, cfg);
            out.write("portfolios.csv", [&](std::ostream& o) {
                o << portfolio::kPortfolioHeader << '\n';
                for (const auto& f : sorts.families) {
                    std::ostringstream body;
                    portfolio::write_portfolios_csv(body, f.scheme, f.family + "_" + cfg.sort_scheme);
                    const auto s = body.str();
                    o << s.substr(s.find('\n') + 1);
                }
            });
            out.write("mimic_weights.csv", [&](std::ostream& o) {
                o << "family,base_asset,weight,std_error\n";
                for (const auto& f : sorts.families)
                    for (std::size_t i = 0; i < f.mimic.base_asset_ids.size(); ++i) {
                        const auto k = static_cast<Eigen::Index>(i);
                        o << f.family << ',' << f.mimic.base_asset_ids[i] << ','
                          << csv::format_double(f.mimic.weights(k)) << ',' << csv::format_double(f.mimic.weight_se(k))
                          << '\n';
                    }
            });
            for (const auto& f : sorts.families) {
                for (const auto& w : f.mimic.warnings) report.warnings.push_back(f.family + ": " + w);
                out.write("assets_" + f.family + ".csv",
                          [&](std::ostream& o) { cross_section::write_dated_matrix(o, f.assets); });
                out.write("pricing_" + f.family + ".csv",
                          [&](std::ostream& o) { cross_section::write_dated_matrix(o, f.pricing); });
            }
            out.write("table3.txt", [&](std::ostream& o) { o << sorts.table3; });
            break;
        }
        case Stage::fmb: {
            auto res = compute_fmb(read_assets_and_pricing(cfg, report), cfg);
            for (auto& w : res.warnings) report.warnings.push_back(std::move(w));
            const auto rows = merge_premia(cfg, "fmb_", std::move(res.rows));
            out.write("premia.csv", [&](std::ostream& o) { cross_section::write_premia_csv(o, rows); });
            out.write("table6.txt", [&](std::ostream& o) { o << res.table; });
            break;
        }
        case Stage::threepass: {
            auto res = compute_three_pass(read_assets_and_pricing(cfg, report), cfg);
            for (auto& w : res.warnings) report.warnings.push_back(std::move(w));
            const auto rows = merge_premia(cfg, "3pass_", std::move(res.rows));
            out.write("premia.csv", [&](std::ostream& o) { cross_section::write_premia_csv(o, rows); });
            out.write("table9.txt", [&](std::ostream& o) { o << res.table; });
            break;
        }
    }
    report.outputs = out.commit();
    return report;
}

}  // namespace fearfactor::pipeline
