#include "fearfactor/portfolio.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "fearfactor/csv.hpp"
#include "fearfactor/hac.hpp"
#include "fearfactor/linalg.hpp"

namespace fearfactor::portfolio {

using Eigen::Index;

std::optional<std::size_t> MonthlyPanel::month_of(Date d) const {
    const int key = d.month_index();
    auto it = std::lower_bound(months.begin(), months.end(), key,
                               [](Date m, int k) { return m.month_index() < k; });
    if (it == months.end() || it->month_index() != key) return std::nullopt;
    return static_cast<std::size_t>(it - months.begin());
}

double compound(std::span<const double> daily) {
    double g = 1.0;
    for (double r : daily) g *= 1.0 + r;
    return g - 1.0;
}

MonthlyPanel monthly_panel(std::span<const market_data::StockRecord> records) {
    MonthlyPanel p;
    std::map<int, Date> month_end;
    std::map<std::string, std::size_t> stock_col;
    for (const auto& r : records) {
        auto [it, inserted] = month_end.try_emplace(r.date.month_index(), r.date);
        if (!inserted && it->second < r.date) it->second = r.date;
        stock_col.emplace(r.stock_id, 0);
    }
    for (auto& [key, d] : month_end) p.months.push_back(d);
    std::size_t c = 0;
    for (auto& [id, col] : stock_col) {
        col = c++;
        p.stocks.push_back(id);
    }
    const auto rows = static_cast<Index>(p.months.size());
    const auto cols = static_cast<Index>(p.stocks.size());
    p.market_cap = Eigen::MatrixXd::Constant(rows, cols, kMissing);
    p.price = p.market_cap;
    p.ret = p.market_cap;
    p.volume = p.market_cap;

    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (records[a].stock_id != records[b].stock_id) return records[a].stock_id < records[b].stock_id;
        return records[a].date < records[b].date;
    });
    std::size_t i = 0;
    while (i < order.size()) {
        const auto& first = records[order[i]];
        const auto col = static_cast<Index>(stock_col.at(first.stock_id));
        const int month = first.date.month_index();
        const auto row = static_cast<Index>(*p.month_of(first.date));
        double growth = 1.0;
        double volume = 0.0;
        std::size_t j = i;
        for (; j < order.size(); ++j) {
            const auto& r = records[order[j]];
            if (r.stock_id != first.stock_id || r.date.month_index() != month) break;
            growth *= 1.0 + r.excess_return;
            volume += r.volume;
            p.market_cap(row, col) = r.market_cap;
            p.price(row, col) = r.price;
        }
        p.ret(row, col) = growth - 1.0;
        p.volume(row, col) = volume;
        i = j;
    }
    return p;
}

std::vector<std::size_t> eligible_universe(const MonthlyPanel& panel, std::size_t month,
                                           const EligibilityRules& rules) {
    const auto row = static_cast<Index>(month);
    std::vector<std::size_t> cand;
    for (Index c = 0; c < panel.market_cap.cols(); ++c) {
        const double cap = panel.market_cap(row, c);
        if (is_missing(cap) || cap <= 0.0 || is_missing(panel.price(row, c)) || is_missing(panel.ret(row, c)))
            continue;
        cand.push_back(static_cast<std::size_t>(c));
    }
    const std::size_t n = cand.size();
    std::vector<bool> drop(n, false);
    auto ranked = [&](const Eigen::MatrixXd& m) {
        std::vector<std::size_t> o(n);
        std::iota(o.begin(), o.end(), 0);
        std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) {
            return m(row, static_cast<Index>(cand[a])) < m(row, static_cast<Index>(cand[b]));
        });
        return o;
    };
    const auto n_small = static_cast<std::size_t>(std::floor(rules.cap_bottom_fraction * static_cast<double>(n)));
    const auto by_cap = ranked(panel.market_cap);
    for (std::size_t k = 0; k < n_small; ++k) drop[by_cap[k]] = true;

    const auto n_tail = static_cast<std::size_t>(std::floor(rules.return_trim_fraction * static_cast<double>(n)));
    const auto by_ret = ranked(panel.ret);
    for (std::size_t k = 0; k < n_tail && k < n; ++k) {
        drop[by_ret[k]] = true;
        drop[by_ret[n - 1 - k]] = true;
    }
    for (std::size_t k = 0; k < n; ++k)
        if (panel.price(row, static_cast<Index>(cand[k])) < rules.min_price) drop[k] = true;

    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < n; ++k)
        if (!drop[k]) out.push_back(cand[k]);
    return out;
}

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::single: return "single";
        case Scheme::controlled: return "controlled";
        case Scheme::conditional_double: return "conditional_double";
        case Scheme::unconditional_double: return "unconditional_double";
    }
    return "single";
}

Scheme scheme_from_string(const std::string& s) {
    for (auto v : {Scheme::single, Scheme::controlled, Scheme::conditional_double, Scheme::unconditional_double})
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown sort scheme: " + s);
}

ControlSource control_source_from_string(const std::string& s) {
    if (s == "none" || s.empty()) return ControlSource::none;
    if (s == "beta_control") return ControlSource::beta_control;
    if (s == "market_cap") return ControlSource::market_cap;
    if (s == "volume") return ControlSource::volume;
    throw std::invalid_argument("unknown sort control: " + s);
}

Eigen::Index PortfolioReturnPanel::column(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw std::out_of_range("no portfolio labelled " + label);
    return it - labels.begin();
}

DatedSeries PortfolioReturnPanel::series(const std::string& label) const {
    const Index c = column(label);
    DatedSeries s{dates, {}};
    s.values.resize(dates.size());
    for (std::size_t t = 0; t < dates.size(); ++t) s.values[t] = returns(static_cast<Index>(t), c);
    return s;
}

std::vector<int> quantile_buckets(std::span<const double> key, int q) {
    const std::size_t n = key.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
    std::vector<int> bucket(n);
    for (std::size_t r = 0; r < n; ++r)
        bucket[order[r]] = static_cast<int>(r * static_cast<std::size_t>(q) / n);
    return bucket;
}

namespace {

struct CellStats {
    double weight = 0.0;       // formation weight (cap or 1)
    double weighted_ret = 0.0; // sum of weight * return over members with a return
    double weight_ret = 0.0;   // sum of weight over members with a return
    int n_ret = 0;

    [[nodiscard]] double value() const { return weight_ret > 0.0 ? weighted_ret / weight_ret : kMissing; }
};

double average(const std::vector<double>& xs) {
    double s = 0.0;
    int n = 0;
    for (double x : xs)
        if (!is_missing(x)) {
            s += x;
            ++n;
        }
    return n > 0 ? s / n : kMissing;
}

std::vector<std::string> make_labels(const SortSpec& spec) {
    std::vector<std::string> labels;
    const int q = spec.n_quantiles;
    const int qc = spec.n_control_quantiles;
    if (spec.scheme == Scheme::single || spec.scheme == Scheme::controlled) {
        for (int j = 1; j <= q; ++j) labels.push_back(std::to_string(j));
        return labels;
    }
    for (int i = 1; i <= qc; ++i)
        for (int j = 1; j <= q; ++j) labels.push_back("c" + std::to_string(i) + "b" + std::to_string(j));
    for (int j = 1; j <= q; ++j) labels.push_back("b" + std::to_string(j));
    for (int i = 1; i <= qc; ++i) labels.push_back("c" + std::to_string(i));
    for (int i = 1; i <= qc; ++i)
        labels.push_back("c" + std::to_string(i) + ":b" + std::to_string(q) + "-b1");
    for (int j = 1; j <= q; ++j)
        labels.push_back("b" + std::to_string(j) + ":c" + std::to_string(qc) + "-c1");
    return labels;
}

}  // namespace

PortfolioReturnPanel sort_portfolios(std::span<const Formation> formations, const SortSpec& spec) {
    if (spec.n_quantiles < 2) throw std::invalid_argument("sort_portfolios: need at least 2 quantiles");
    const bool two_way = spec.scheme != Scheme::single;
    if (two_way && spec.n_control_quantiles < 2)
        throw std::invalid_argument("sort_portfolios: need at least 2 control quantiles");
    const int q = spec.n_quantiles;
    const int qc = two_way ? spec.n_control_quantiles : 1;
    const std::size_t n_cells = static_cast<std::size_t>(q) * static_cast<std::size_t>(qc);

    PortfolioReturnPanel out;
    out.scheme = spec.scheme;
    out.labels = make_labels(spec);
    const auto T = static_cast<Index>(formations.size());
    const auto L = static_cast<Index>(out.labels.size());
    out.returns = Eigen::MatrixXd::Constant(T, L, kMissing);
    out.n_stocks = Eigen::MatrixXi::Zero(T, L);
    out.weight_share = Eigen::MatrixXd::Constant(T, L, kMissing);
    out.spread.assign(formations.size(), kMissing);
    out.memberships.resize(formations.size());

    for (Index t = 0; t < T; ++t) {
        const auto& f = formations[static_cast<std::size_t>(t)];
        out.dates.push_back(f.holding);
        if (f.sort_key.size() != f.ids.size() || f.cap.size() != f.ids.size() ||
            f.next_return.size() != f.ids.size() || (two_way && f.control_key.size() != f.ids.size()))
            throw std::invalid_argument("sort_portfolios: formation columns differ in length");

        std::vector<std::size_t> valid;
        for (std::size_t s = 0; s < f.ids.size(); ++s) {
            if (is_missing(f.sort_key[s])) continue;
            if (two_way && is_missing(f.control_key[s])) continue;
            if (spec.weighting == Weighting::value && (is_missing(f.cap[s]) || f.cap[s] <= 0.0)) continue;
            valid.push_back(s);
        }
        if (valid.size() < n_cells) continue;

        std::vector<std::size_t> cell(valid.size());
        std::vector<double> key(valid.size());
        for (std::size_t k = 0; k < valid.size(); ++k) key[k] = f.sort_key[valid[k]];
        if (!two_way) {
            const auto b = quantile_buckets(key, q);
            for (std::size_t k = 0; k < valid.size(); ++k) cell[k] = static_cast<std::size_t>(b[k]);
        } else {
            std::vector<double> ckey(valid.size());
            for (std::size_t k = 0; k < valid.size(); ++k) ckey[k] = f.control_key[valid[k]];
            const auto cb = quantile_buckets(ckey, qc);
            if (spec.scheme == Scheme::unconditional_double) {
                const auto b = quantile_buckets(key, q);
                for (std::size_t k = 0; k < valid.size(); ++k)
                    cell[k] = static_cast<std::size_t>(cb[k] * q + b[k]);
            } else {
                for (int i = 0; i < qc; ++i) {
                    std::vector<std::size_t> members;
                    std::vector<double> sub;
                    for (std::size_t k = 0; k < valid.size(); ++k)
                        if (cb[k] == i) {
                            members.push_back(k);
                            sub.push_back(key[k]);
                        }
                    const auto b = quantile_buckets(sub, q);
                    for (std::size_t m = 0; m < members.size(); ++m)
                        cell[members[m]] = static_cast<std::size_t>(i * q + b[m]);
                }
            }
        }

        std::vector<CellStats> stats(n_cells);
        double total_weight = 0.0;
        for (std::size_t k = 0; k < valid.size(); ++k) {
            const std::size_t s = valid[k];
            const double w = spec.weighting == Weighting::value ? f.cap[s] : 1.0;
            auto& c = stats[cell[k]];
            c.weight += w;
            total_weight += w;
            if (!is_missing(f.next_return[s])) {
                c.weighted_ret += w * f.next_return[s];
                c.weight_ret += w;
                ++c.n_ret;
            }
        }
        auto& members = out.memberships[static_cast<std::size_t>(t)];
        for (std::size_t k = 0; k < valid.size(); ++k) {
            const std::size_t s = valid[k];
            const double w = spec.weighting == Weighting::value ? f.cap[s] : 1.0;
            const auto c = cell[k];
            if (spec.scheme == Scheme::controlled)
                members.push_back({f.ids[s], static_cast<int>(c % static_cast<std::size_t>(q)),
                                   w / stats[c].weight / qc});
            else
                members.push_back({f.ids[s], static_cast<int>(c), w / stats[c].weight});
        }
        std::sort(members.begin(), members.end(),
                  [](const Member& a, const Member& b) { return a.stock_id < b.stock_id; });

        auto cell_ret = [&](int i, int j) { return stats[static_cast<std::size_t>(i * q + j)].value(); };
        auto cell_n = [&](int i, int j) { return stats[static_cast<std::size_t>(i * q + j)].n_ret; };
        auto beta_margin = [&](int j) {
            std::vector<double> xs;
            for (int i = 0; i < qc; ++i) xs.push_back(cell_ret(i, j));
            return average(xs);
        };

        if (spec.scheme == Scheme::single || spec.scheme == Scheme::controlled) {
            for (int j = 0; j < q; ++j) {
                int n = 0;
                double w = 0.0;
                for (int i = 0; i < qc; ++i) {
                    n += cell_n(i, j);
                    w += stats[static_cast<std::size_t>(i * q + j)].weight;
                }
                out.returns(t, j) = beta_margin(j);
                out.n_stocks(t, j) = n;
                out.weight_share(t, j) = w / total_weight;
            }
            out.spread[static_cast<std::size_t>(t)] = out.returns(t, q - 1) - out.returns(t, 0);
            continue;
        }

        Index col = 0;
        for (int i = 0; i < qc; ++i)
            for (int j = 0; j < q; ++j, ++col) {
                out.returns(t, col) = cell_ret(i, j);
                out.n_stocks(t, col) = cell_n(i, j);
                out.weight_share(t, col) = stats[static_cast<std::size_t>(i * q + j)].weight / total_weight;
            }
        for (int j = 0; j < q; ++j, ++col) {
            out.returns(t, col) = beta_margin(j);
            int n = 0;
            for (int i = 0; i < qc; ++i) n += cell_n(i, j);
            out.n_stocks(t, col) = n;
        }
        for (int i = 0; i < qc; ++i, ++col) {
            std::vector<double> xs;
            int n = 0;
            for (int j = 0; j < q; ++j) {
                xs.push_back(cell_ret(i, j));
                n += cell_n(i, j);
            }
            out.returns(t, col) = average(xs);
            out.n_stocks(t, col) = n;
        }
        for (int i = 0; i < qc; ++i, ++col) {
            out.returns(t, col) = cell_ret(i, q - 1) - cell_ret(i, 0);
            out.n_stocks(t, col) = cell_n(i, q - 1) + cell_n(i, 0);
        }
        for (int j = 0; j < q; ++j, ++col) {
            out.returns(t, col) = cell_ret(qc - 1, j) - cell_ret(0, j);
            out.n_stocks(t, col) = cell_n(qc - 1, j) + cell_n(0, j);
        }
        out.spread[static_cast<std::size_t>(t)] = beta_margin(q - 1) - beta_margin(0);
    }
    return out;
}

std::vector<Formation> build_formations(const MonthlyPanel& panel, std::span<const exposures::ExposureEstimate> betas,
                                        ControlSource control, const EligibilityRules& rules) {
    std::map<int, std::unordered_map<std::string, const exposures::ExposureEstimate*>> by_month;
    for (const auto& e : betas) by_month[e.as_of_month.month_index()][e.stock_id] = &e;

    std::vector<Formation> out;
    for (std::size_t m = 0; m + 1 < panel.months.size(); ++m) {
        if (panel.months[m + 1].month_index() != panel.months[m].month_index() + 1) continue;
        auto bm = by_month.find(panel.months[m].month_index());
        if (bm == by_month.end()) continue;
        const auto row = static_cast<Index>(m);
        Formation f;
        f.formation = panel.months[m];
        f.holding = panel.months[m + 1];
        for (auto c : eligible_universe(panel, m, rules)) {
            const auto& id = panel.stocks[c];
            auto it = bm->second.find(id);
            if (it == bm->second.end()) continue;
            const auto col = static_cast<Index>(c);
            f.ids.push_back(id);
            f.sort_key.push_back(it->second->beta_cf);
            f.cap.push_back(panel.market_cap(row, col));
            f.next_return.push_back(panel.ret(row + 1, col));
            switch (control) {
                case ControlSource::none: break;
                case ControlSource::beta_control: f.control_key.push_back(it->second->beta_control); break;
                case ControlSource::market_cap: f.control_key.push_back(panel.market_cap(row, col)); break;
                case ControlSource::volume: f.control_key.push_back(panel.volume(row, col)); break;
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

Eigen::MatrixXd daily_bucket_returns(const PortfolioReturnPanel& panel,
                                     std::span<const exposures::StockReturns> daily, const std::vector<Date>& days) {
    std::unordered_map<std::string, std::vector<double>> aligned;
    for (const auto& s : daily) aligned.emplace(s.stock_id, align_to(s.returns, days));
    const auto L = static_cast<Index>(panel.labels.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(static_cast<Index>(days.size()), L, kMissing);

    std::size_t d = 0;
    for (std::size_t k = 0; k < panel.dates.size(); ++k) {
        const auto& members = panel.memberships[k];
        if (members.empty()) continue;
        const int month = panel.dates[k].month_index();
        while (d < days.size() && days[d].month_index() < month) ++d;
        std::vector<const std::vector<double>*> series;
        for (const auto& m : members) {
            auto it = aligned.find(m.stock_id);
            series.push_back(it == aligned.end() ? nullptr : &it->second);
        }
        for (std::size_t day = d; day < days.size() && days[day].month_index() == month; ++day) {
            std::vector<double> num(static_cast<std::size_t>(L), 0.0), den(static_cast<std::size_t>(L), 0.0);
            for (std::size_t i = 0; i < members.size(); ++i) {
                if (!series[i]) continue;
                const double r = (*series[i])[day];
                if (is_missing(r)) continue;
                const auto b = static_cast<std::size_t>(members[i].bucket);
                num[b] += members[i].weight * r;
                den[b] += members[i].weight;
            }
            for (Index b = 0; b < L; ++b) {
                const auto bi = static_cast<std::size_t>(b);
                if (den[bi] > 0.0) out(static_cast<Index>(day), b) = num[bi] / den[bi];
            }
        }
    }
    return out;
}

Eigen::Index FactorTable::column(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::out_of_range("no benchmark factor named " + name);
    return it - names.begin();
}

FactorTable load_ff_csv(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw csv::FileError(path.string() + ": empty file");
    const std::vector<std::string_view> header{"date", "mkt_rf", "smb", "hml", "rmw", "cma", "mom", "rf"};
    csv::expect_header(lines[0], header, path);
    FactorTable t;
    for (std::size_t c = 1; c < header.size(); ++c) t.names.emplace_back(header[c]);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = csv::split(lines[i]);
        if (f.size() != header.size())
            throw csv::FileError(path.string() + ":" + std::to_string(i + 1) + ": wrong number of fields");
        try {
            const Date d = Date::parse(f[0]);
            if (!t.dates.empty() && !(t.dates.back() < d))
                throw std::invalid_argument("dates not strictly increasing");
            t.dates.push_back(d);
            std::vector<double> row;
            for (std::size_t c = 1; c < f.size(); ++c) row.push_back(csv::parse_double(f[c]));
            rows.push_back(std::move(row));
        } catch (const std::invalid_argument& e) {
            throw csv::FileError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.names.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            t.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    return t;
}

void write_ff_csv(std::ostream& out, const FactorTable& table) {
    out << kFactorFileHeader << '\n';
    for (std::size_t r = 0; r < table.dates.size(); ++r) {
        out << table.dates[r].to_string();
        for (Index c = 0; c < table.values.cols(); ++c)
            out << ',' << csv::format_double(table.values(static_cast<Index>(r), c));
        out << '\n';
    }
}

AlphaResult alpha_regression(const DatedSeries& portfolio_returns, const FactorTable& factors, FactorModel model,
                             int nw_lags, std::size_t min_months) {
    std::vector<std::string> names{"mkt_rf", "smb", "hml", "rmw", "cma"};
    if (model == FactorModel::ff5_mom) names.emplace_back("mom");
    std::vector<Index> cols;
    for (const auto& n : names) cols.push_back(factors.column(n));

    std::map<int, Index> row_of;
    for (std::size_t r = 0; r < factors.dates.size(); ++r)
        row_of[factors.dates[r].month_index()] = static_cast<Index>(r);
    std::vector<std::pair<double, Index>> matched;
    for (std::size_t t = 0; t < portfolio_returns.size(); ++t) {
        const double y = portfolio_returns.values[t];
        if (is_missing(y)) continue;
        auto it = row_of.find(portfolio_returns.dates[t].month_index());
        if (it == row_of.end()) continue;
        bool ok = true;
        for (auto c : cols) ok = ok && !is_missing(factors.values(it->second, c));
        if (ok) matched.emplace_back(y, it->second);
    }
    if (matched.size() < min_months || matched.size() <= names.size() + 1)
        throw InsufficientOverlap("alpha_regression: " + std::to_string(matched.size()) +
                                  " months overlap the benchmark factors, need " + std::to_string(min_months));
    const auto n = static_cast<Index>(matched.size());
    Eigen::MatrixXd x(n, static_cast<Index>(cols.size()));
    Eigen::VectorXd y(n);
    for (Index t = 0; t < n; ++t) {
        y(t) = matched[static_cast<std::size_t>(t)].first;
        for (std::size_t k = 0; k < cols.size(); ++k)
            x(t, static_cast<Index>(k)) = factors.values(matched[static_cast<std::size_t>(t)].second, cols[k]);
    }
    const int lags = std::min<int>(nw_lags, static_cast<int>(n) - 1);
    const auto fit = cross_section::ols_newey_west(with_intercept(x), y, lags);
    AlphaResult r;
    r.alpha = fit.coef(0);
    r.t_alpha = fit.t_stat(0);
    r.factor_names = names;
    r.betas = fit.coef.tail(static_cast<Index>(names.size()));
    r.n_months = matched.size();
    return r;
}

MeanT mean_with_t(std::span<const double> values, int nw_lags) {
    std::vector<double> xs;
    for (double v : values)
        if (!is_missing(v)) xs.push_back(v);
    MeanT r;
    r.n = xs.size();
    if (xs.size() < 2) return r;
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const int lags = std::min<int>(nw_lags, static_cast<int>(xs.size()) - 1);
    const double var = cross_section::newey_west_variance(xs, lags);
    if (var > 0.0) r.t = r.mean / std::sqrt(var);
    return r;
}

void write_portfolios_csv(std::ostream& out, const PortfolioReturnPanel& panel, const std::string& scheme_tag) {
    out << kPortfolioHeader << '\n';
    for (std::size_t t = 0; t < panel.dates.size(); ++t) {
        const auto row = static_cast<Index>(t);
        const auto date = panel.dates[t].to_string();
        for (std::size_t c = 0; c < panel.labels.size(); ++c) {
            const auto col = static_cast<Index>(c);
            out << scheme_tag << ',' << panel.labels[c] << ',' << date << ','
                << csv::format_double(panel.returns(row, col)) << ',' << panel.n_stocks(row, col) << '\n';
        }
        out << scheme_tag << ",spread," << date << ',' << csv::format_double(panel.spread[t]) << ','
            << panel.memberships[t].size() << '\n';
    }
}

void write_memberships_csv(std::ostream& out, const PortfolioReturnPanel& panel) {
    out << "date,stock_id,bucket,weight\n";
    for (std::size_t t = 0; t < panel.dates.size(); ++t)
        for (const auto& m : panel.memberships[t])
            out << panel.dates[t].to_string() << ',' << m.stock_id << ','
                << panel.labels[static_cast<std::size_t>(m.bucket)] << ',' << csv::format_double(m.weight) << '\n';
}

}  // namespace fearfactor::portfolio
