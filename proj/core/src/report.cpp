#include "fearfactor/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fearfactor/csv.hpp"

namespace fearfactor::report {

std::string TextTable::render() const {
    std::size_t n_cols = header.size();
    for (const auto& r : rows) n_cols = std::max(n_cols, r.size());
    std::vector<std::size_t> width(n_cols, 0);
    auto measure = [&](const std::vector<std::string>& r) {
        if (r.size() < 2) return;
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    };
    measure(header);
    for (const auto& r : rows) measure(r);
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    total = std::max<std::size_t>(total, title.size());

    std::ostringstream out;
    const std::string rule(total, '-');
    auto line = [&](const std::vector<std::string>& r) {
        std::string s;
        for (std::size_t c = 0; c < n_cols; ++c) {
            const std::string cell = c < r.size() ? r[c] : "";
            const std::string pad(width[c] - std::min(width[c], cell.size()), ' ');
            s += c == 0 ? cell + pad : "  " + pad + cell;
        }
        while (!s.empty() && s.back() == ' ') s.pop_back();
        out << s << '\n';
    };
    out << title << '\n' << rule << '\n';
    if (!header.empty()) {
        line(header);
        out << rule << '\n';
    }
    for (const auto& r : rows) {
        if (r.empty())
            out << rule << '\n';
        else if (r.size() == 1)
            out << r[0] << '\n';
        else
            line(r);
    }
    out << rule << '\n';
    return out.str();
}

namespace {

std::string fx(double v, int decimals) { return csv::format_fixed(v, decimals); }

}  // namespace

std::string table1(const implied_variance::PanelSummary& s) {
    TextTable t;
    t.title = "Descriptive statistics of firm-level implied variances";
    t.header = {"", "total", "good", "bad"};
    t.rows.push_back({"Mean", fx(s.total.mean, 3), fx(s.good.mean, 3), fx(s.bad.mean, 3)});
    t.rows.push_back({"Std", fx(s.total.std, 3), fx(s.good.std, 3), fx(s.bad.std, 3)});
    t.rows.push_back({"Ave. pairwise covariance", fx(s.total.avg_pairwise_cov, 3), fx(s.good.avg_pairwise_cov, 3),
                      fx(s.bad.avg_pairwise_cov, 3)});
    return t.render();
}

std::string table2(const std::vector<ExplainedColumn>& columns) {
    TextTable t;
    t.title = "Proportion of variation explained by the common factor";
    t.header = {"A: Rolling sample"};
    for (const auto& c : columns) t.header.push_back(c.name);
    std::vector<std::vector<double>> clean;
    for (const auto& c : columns) {
        std::vector<double> v;
        for (double x : c.rolling)
            if (!is_missing(x)) v.push_back(100.0 * x);
        std::sort(v.begin(), v.end());
        clean.push_back(std::move(v));
    }
    auto row = [&](const std::string& name, auto stat) {
        std::vector<std::string> r{name};
        for (const auto& v : clean) r.push_back(v.empty() ? "" : fx(stat(v), 2));
        t.rows.push_back(std::move(r));
    };
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    row("Mean (%)", mean);
    row("Median (%)", [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    });
    row("Min (%)", [](const std::vector<double>& v) { return v.front(); });
    row("Max (%)", [](const std::vector<double>& v) { return v.back(); });
    row("Std (%)", [&](const std::vector<double>& v) {
        if (v.size() < 2) return kMissing;
        const double m = mean(v);
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    });
    t.rows.push_back({});
    std::vector<std::string> head{"B: Full sample"};
    for (const auto& c : columns) head.push_back(c.name);
    t.rows.push_back(head);
    t.rows.push_back({});
    std::vector<std::string> full{"% variation"};
    for (const auto& c : columns) full.push_back(fx(100.0 * c.full_sample, 2));
    t.rows.push_back(full);
    return t.render();
}

SortSummary summarize_sort(const std::string& title, const portfolio::PortfolioReturnPanel& panel,
                           const portfolio::FactorTable& ff, int nw_lags) {
    using portfolio::Scheme;
    std::vector<std::string> labels;
    int q = 0;
    const bool nested = panel.scheme == Scheme::conditional_double || panel.scheme == Scheme::unconditional_double;
    for (const auto& l : panel.labels) {
        const bool beta_margin = nested ? (l.size() > 1 && l[0] == 'b' && l.find(':') == std::string::npos)
                                        : true;
        if (beta_margin) {
            labels.push_back(l);
            ++q;
        }
    }
    SortSummary s;
    s.title = title;
    auto column = [&](const std::string& label, const DatedSeries& series) {
        SortColumn c;
        c.label = label;
        c.excess = portfolio::mean_with_t(series.values, nw_lags);
        try {
            c.ff5 = portfolio::alpha_regression(series, ff, portfolio::FactorModel::ff5, nw_lags);
            c.ff5_mom = portfolio::alpha_regression(series, ff, portfolio::FactorModel::ff5_mom, nw_lags);
        } catch (const InsufficientOverlap&) {
        }
        s.columns.push_back(std::move(c));
    };
    for (std::size_t j = 0; j < labels.size(); ++j) column(std::to_string(j + 1), panel.series(labels[j]));
    column(std::to_string(q) + "-1", panel.spread_series());
    return s;
}

std::string table3(const std::vector<SortSummary>& panels) {
    TextTable t;
    t.title = "Value-weighted portfolios sorted on factor loadings";
    for (const auto& p : panels) {
        t.rows.push_back({});
        std::vector<std::string> head{p.title};
        for (const auto& c : p.columns) head.push_back(c.label);
        t.rows.push_back(head);
        t.rows.push_back({});
        std::vector<std::string> mean{"mean (%)"}, tm{"t-stat"}, a5{"alpha FF5"}, t5{"t-stat"}, a6{"alpha FF5+MOM"},
            t6{"t-stat"};
        for (const auto& c : p.columns) {
            mean.push_back(fx(100.0 * c.excess.mean, 2));
            tm.push_back(fx(c.excess.t, 2));
            a5.push_back(c.ff5 ? fx(100.0 * c.ff5->alpha, 2) : "");
            t5.push_back(c.ff5 ? fx(c.ff5->t_alpha, 2) : "");
            a6.push_back(c.ff5_mom ? fx(100.0 * c.ff5_mom->alpha, 2) : "");
            t6.push_back(c.ff5_mom ? fx(c.ff5_mom->t_alpha, 2) : "");
        }
        for (auto* r : {&mean, &tm, &a5, &t5, &a6, &t6}) t.rows.push_back(std::move(*r));
    }
    return t.render();
}

std::string table6(const std::vector<std::pair<std::string, cross_section::RiskPremiumEstimate>>& columns) {
    TextTable t;
    t.title = "Fama-MacBeth risk premia (percent per month)";
    t.header = {""};
    std::vector<std::string> factors;
    for (const auto& [label, e] : columns) {
        t.header.push_back(label);
        auto add = [&](const std::string& f) {
            if (std::find(factors.begin(), factors.end(), f) == factors.end()) factors.push_back(f);
        };
        add(e.factor_name);
        for (const auto& c : e.companions) add(c.name);
    }
    auto lookup = [](const cross_section::RiskPremiumEstimate& e, const std::string& f) -> std::optional<cross_section::Premium> {
        if (e.factor_name == f) return cross_section::Premium{f, e.lambda, e.t_stat};
        for (const auto& c : e.companions)
            if (c.name == f) return c;
        return std::nullopt;
    };
    std::vector<std::string> l0{"lambda_0"}, t0{"t-stat"};
    for (const auto& [label, e] : columns) {
        l0.push_back(fx(100.0 * e.intercept, 2));
        t0.push_back(fx(e.intercept_t, 2));
    }
    t.rows.push_back(l0);
    t.rows.push_back(t0);
    for (const auto& f : factors) {
        std::vector<std::string> l{"lambda_" + f}, tt{"t-stat"};
        for (const auto& [label, e] : columns) {
            const auto p = lookup(e, f);
            l.push_back(p ? fx(100.0 * p->lambda, 2) : "");
            tt.push_back(p ? fx(p->t_stat, 2) : "");
        }
        t.rows.push_back(l);
        t.rows.push_back(tt);
    }
    t.rows.push_back({});
    std::vector<std::string> r2{"adj. R2"};
    for (const auto& [label, e] : columns) r2.push_back(fx(e.adj_r2, 3));
    t.rows.push_back(r2);
    return t.render();
}

std::string table9(const std::vector<std::pair<std::string, cross_section::ThreePassResult>>& columns) {
    TextTable t;
    t.title = "Three-pass risk premia (percent per month)";
    t.header = {""};
    std::vector<std::string> lf{"lambda_factor"}, tf{"t-stat"}, wf{"Wald (p-value)"}, lm{"lambda_MKT"}, tmk{"t-stat"},
        wm{"Wald (p-value)"}, r2{"adj. R2"}, nf{"No. factors"};
    for (const auto& [label, r] : columns) {
        t.header.push_back(label);
        lf.push_back(fx(100.0 * r.lambda, 2));
        tf.push_back(fx(r.t_stat, 2));
        wf.push_back(fx(r.weak_factor_p, 2));
        lm.push_back(fx(100.0 * r.lambda_market, 2));
        tmk.push_back(fx(r.t_market, 2));
        wm.push_back(fx(r.market_weak_p, 2));
        r2.push_back(fx(r.adj_r2, 2));
        nf.push_back(std::to_string(r.n_latent_factors));
    }
    for (auto* r : {&lf, &tf, &wf, &lm, &tmk, &wm}) t.rows.push_back(std::move(*r));
    t.rows.push_back({});
    t.rows.push_back(std::move(r2));
    t.rows.push_back(std::move(nf));
    return t.render();
}

}  // namespace fearfactor::report
