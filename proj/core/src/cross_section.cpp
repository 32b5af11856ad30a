#include "fearfactor/cross_section.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fearfactor/csv.hpp"
#include "fearfactor/linalg.hpp"

namespace fearfactor::cross_section {

using Eigen::Index;

Index DatedMatrix::column(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw std::out_of_range("no column named " + name);
    return it - names.begin();
}

DatedSeries DatedMatrix::series(Index col) const {
    DatedSeries s{dates, std::vector<double>(dates.size())};
    for (std::size_t t = 0; t < dates.size(); ++t) s.values[t] = values(static_cast<Index>(t), col);
    return s;
}

DatedMatrix read_dated_matrix(const std::filesystem::path& path) {
    const auto raw = csv::read_matrix(path);
    DatedMatrix m;
    m.names = raw.columns;
    for (std::size_t r = 0; r < raw.dates.size(); ++r) {
        try {
            m.dates.push_back(Date::parse(raw.dates[r]));
        } catch (const std::invalid_argument& e) {
            throw csv::FileError(path.string() + ": row " + std::to_string(r + 2) + ": " + e.what());
        }
        if (r > 0 && !(m.dates[r - 1] < m.dates[r]))
            throw csv::FileError(path.string() + ": row " + std::to_string(r + 2) + ": dates not increasing");
    }
    m.values.resize(static_cast<Index>(raw.rows.size()), static_cast<Index>(m.names.size()));
    for (std::size_t r = 0; r < raw.rows.size(); ++r)
        for (std::size_t c = 0; c < raw.rows[r].size(); ++c)
            m.values(static_cast<Index>(r), static_cast<Index>(c)) = raw.rows[r][c];
    return m;
}

void write_dated_matrix(std::ostream& out, const DatedMatrix& m) {
    csv::Matrix raw;
    raw.columns = m.names;
    for (std::size_t r = 0; r < m.dates.size(); ++r) {
        raw.dates.push_back(m.dates[r].to_string());
        std::vector<double> row(m.names.size());
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = m.values(static_cast<Index>(r), static_cast<Index>(c));
        raw.rows.push_back(std::move(row));
    }
    csv::write_matrix(out, raw);
}

std::pair<DatedMatrix, DatedMatrix> align_monthly(const DatedMatrix& a, const DatedMatrix& b) {
    std::map<int, Index> b_row;
    for (std::size_t r = 0; r < b.dates.size(); ++r) b_row[b.dates[r].month_index()] = static_cast<Index>(r);
    std::vector<std::pair<Index, Index>> keep;
    for (std::size_t r = 0; r < a.dates.size(); ++r) {
        auto it = b_row.find(a.dates[r].month_index());
        if (it == b_row.end()) continue;
        const auto ar = static_cast<Index>(r);
        if (a.values.row(ar).hasNaN() || b.values.row(it->second).hasNaN()) continue;
        keep.emplace_back(ar, it->second);
    }
    DatedMatrix oa{{}, a.names, Eigen::MatrixXd(static_cast<Index>(keep.size()), a.values.cols())};
    DatedMatrix ob{{}, b.names, Eigen::MatrixXd(static_cast<Index>(keep.size()), b.values.cols())};
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const auto r = static_cast<Index>(k);
        oa.dates.push_back(a.dates[static_cast<std::size_t>(keep[k].first)]);
        ob.dates.push_back(oa.dates.back());
        oa.values.row(r) = a.values.row(keep[k].first);
        ob.values.row(r) = b.values.row(keep[k].second);
    }
    return {std::move(oa), std::move(ob)};
}

RiskPremiumEstimate fama_macbeth(const DatedMatrix& assets, const DatedMatrix& factors, int nw_lags) {
    const auto [r, f] = align_monthly(assets, factors);
    const Index T = r.values.rows();
    const Index N = r.values.cols();
    const Index K = f.values.cols();
    if (K < 1) throw std::invalid_argument("fama_macbeth: no pricing factors");
    if (N <= K + 1)
        throw std::invalid_argument("fama_macbeth: need more assets (" + std::to_string(N) + ") than factors + 1");
    if (T <= K + 1 || T <= nw_lags)
        throw InsufficientOverlap("fama_macbeth: only " + std::to_string(T) + " complete months");

    const Eigen::MatrixXd xf = with_intercept(f.values);
    Eigen::MatrixXd beta(N, K);
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xf);
        qr.setThreshold(1e-10);
        if (qr.rank() < xf.cols()) throw SingularDesign("fama_macbeth: pricing factors are collinear");
        const Eigen::MatrixXd coef = qr.solve(r.values);  // (K+1) x N
        beta = coef.bottomRows(K).transpose();
    }
    const Eigen::MatrixXd xb = with_intercept(beta);
    const double cond = condition_number(xb);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xb);
    qr.setThreshold(1e-10);
    if (qr.rank() < xb.cols()) {
        std::ostringstream msg;
        msg << "fama_macbeth: beta matrix is rank deficient (condition number " << cond << ")";
        throw SingularDesign(msg.str());
    }
    const Eigen::VectorXd mean_r = r.values.colwise().mean().transpose();
    const Eigen::VectorXd coef = qr.solve(mean_r);
    const Eigen::VectorXd resid = mean_r - xb * coef;
    const double tss = (mean_r.array() - mean_r.mean()).square().sum();
    const double r2 = tss > 0.0 ? 1.0 - resid.squaredNorm() / tss : 1.0;

    // Month-by-month cross-sectional estimates; their mean equals coef.
    const Eigen::MatrixXd lambda_t = qr.solve(r.values.transpose()).transpose();  // T x (K+1)
    const Eigen::VectorXd lambda = coef.tail(K);
    const Eigen::MatrixXd sigma_f = sample_covariance(f.values);
    const double c = shanken_multiplier(lambda, sigma_f);

    std::vector<double> var(static_cast<std::size_t>(K + 1));
    for (Index k = 0; k <= K; ++k) {
        std::vector<double> s(lambda_t.col(k).data(), lambda_t.col(k).data() + T);
        var[static_cast<std::size_t>(k)] = c * newey_west_variance(s, nw_lags);
        if (k > 0) var[static_cast<std::size_t>(k)] += sigma_f(k - 1, k - 1) / static_cast<double>(T);
    }
    auto t_of = [&](Index k) {
        const double v = var[static_cast<std::size_t>(k)];
        return v > 0.0 ? coef(k) / std::sqrt(v) : kMissing;
    };

    RiskPremiumEstimate e;
    e.factor_name = f.names[0];
    e.lambda = coef(1);
    e.t_stat = t_of(1);
    e.intercept = coef(0);
    e.intercept_t = t_of(0);
    for (Index k = 1; k < K; ++k) e.companions.push_back({f.names[static_cast<std::size_t>(k)], coef(k + 1), t_of(k + 1)});
    e.adj_r2 = 1.0 - (1.0 - r2) * static_cast<double>(N - 1) / static_cast<double>(N - K - 1);
    e.n_assets = static_cast<std::size_t>(N);
    e.n_months = static_cast<std::size_t>(T);
    e.shanken = c;
    e.beta_condition = cond;
    return e;
}

MimickingPortfolio mimicking_portfolio(const std::string& factor_name, const DatedSeries& innovations,
                                       const DatedMatrix& base_daily, std::size_t min_overlap) {
    const auto y_all = align_to(innovations, base_daily.dates);
    const Index P = base_daily.values.cols();
    std::vector<Index> rows;
    for (std::size_t t = 0; t < base_daily.dates.size(); ++t) {
        const auto tr = static_cast<Index>(t);
        if (!is_missing(y_all[t]) && !base_daily.values.row(tr).hasNaN()) rows.push_back(tr);
    }
    if (rows.size() < min_overlap)
        throw InsufficientOverlap("mimicking_portfolio: " + std::to_string(rows.size()) +
                                  " overlapping days, need " + std::to_string(min_overlap));
    const auto n = static_cast<Index>(rows.size());
    Eigen::MatrixXd x(n, P);
    Eigen::VectorXd y(n);
    for (Index i = 0; i < n; ++i) {
        x.row(i) = base_daily.values.row(rows[static_cast<std::size_t>(i)]);
        y(i) = y_all[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
    }

    MimickingPortfolio m;
    m.factor_name = factor_name;
    m.base_asset_ids = base_daily.names;
    m.weights = Eigen::VectorXd::Zero(P);
    m.weight_se = Eigen::VectorXd::Constant(P, kMissing);
    m.n_obs = static_cast<std::size_t>(n);

    // Collinearity is judged on centered columns so the constant cannot mask it.
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centered);
    qr.setThreshold(1e-10);
    std::vector<Index> kept;
    for (Index k = 0; k < qr.rank(); ++k) kept.push_back(qr.colsPermutation().indices()(k));
    std::sort(kept.begin(), kept.end());
    for (Index c = 0; c < P; ++c)
        if (!std::binary_search(kept.begin(), kept.end(), c))
            m.warnings.push_back("base asset " + base_daily.names[static_cast<std::size_t>(c)] +
                                 " is collinear with the others; weight set to 0");

    const auto K = static_cast<Index>(kept.size());
    Eigen::MatrixXd xk(n, K + 1);
    xk.col(0).setOnes();
    for (Index k = 0; k < K; ++k) xk.col(k + 1) = x.col(kept[static_cast<std::size_t>(k)]);
    const auto fit = ols(xk, y);
    const double dof = static_cast<double>(n - K - 1);
    const double s2 = dof > 0.0 ? fit.residuals.squaredNorm() / dof : kMissing;
    const Eigen::MatrixXd xtx_inv = (xk.transpose() * xk).inverse();
    m.intercept = fit.coef(0);
    for (Index k = 0; k < K; ++k) {
        const Index c = kept[static_cast<std::size_t>(k)];
        m.weights(c) = fit.coef(k + 1);
        m.weight_se(c) = std::sqrt(s2 * xtx_inv(k + 1, k + 1));
    }

    m.daily_returns.dates = base_daily.dates;
    m.daily_returns.values.resize(base_daily.dates.size());
    for (std::size_t t = 0; t < base_daily.dates.size(); ++t) {
        const auto row = base_daily.values.row(static_cast<Index>(t));
        double v = 0.0;
        for (Index c = 0; c < P; ++c)
            if (m.weights(c) != 0.0) v += m.weights(c) * row(c);
        m.daily_returns.values[t] = v;  // NaN propagates from any missing used asset
    }
    const auto& days = m.daily_returns.dates;
    for (std::size_t i = 0; i < days.size();) {
        std::size_t j = i;
        double sum = 0.0;
        int cnt = 0;
        for (; j < days.size() && days[j].month_index() == days[i].month_index(); ++j)
            if (!is_missing(m.daily_returns.values[j])) {
                sum += m.daily_returns.values[j];
                ++cnt;
            }
        m.monthly_returns.dates.push_back(days[j - 1]);
        m.monthly_returns.values.push_back(cnt > 0 ? sum / cnt : kMissing);
        i = j;
    }
    return m;
}

std::vector<PremiumRow> premium_rows(const RiskPremiumEstimate& e, const std::string& spec_id) {
    std::vector<PremiumRow> rows;
    auto add = [&](const std::string& name, double lambda, double t) {
        rows.push_back({spec_id, name, 100.0 * lambda, t, e.adj_r2, e.n_assets, e.n_months, kMissing});
    };
    add(e.factor_name, e.lambda, e.t_stat);
    for (const auto& c : e.companions) add(c.name, c.lambda, c.t_stat);
    add("intercept", e.intercept, e.intercept_t);
    return rows;
}

std::vector<PremiumRow> premium_rows(const ThreePassResult& r, const std::string& spec_id) {
    std::vector<PremiumRow> rows;
    rows.push_back({spec_id, r.factor_name, 100.0 * r.lambda, r.t_stat, r.adj_r2, r.n_assets, r.n_months,
                    r.weak_factor_p});
    if (!is_missing(r.lambda_market))
        rows.push_back({spec_id, "MKT", 100.0 * r.lambda_market, r.t_market, r.adj_r2, r.n_assets, r.n_months,
                        r.market_weak_p});
    return rows;
}

void write_premia_csv(std::ostream& out, const std::vector<PremiumRow>& rows) {
    out << kPremiaHeader << '\n';
    for (const auto& r : rows)
        out << r.spec_id << ',' << r.factor_name << ',' << csv::format_double(r.lambda_pct) << ','
            << csv::format_double(r.t_stat) << ',' << csv::format_double(r.adj_r2) << ',' << r.n_assets << ','
            << r.n_months << ',' << csv::format_double(r.wald_p) << '\n';
}

std::vector<PremiumRow> read_premia_csv(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw csv::FileError(path.string() + ": empty file");
    csv::expect_header(lines[0],
                       {"spec_id", "factor_name", "lambda", "t_stat", "adj_r2", "n_assets", "n_months", "wald_p"},
                       path);
    std::vector<PremiumRow> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto f = csv::split(lines[i]);
        if (f.size() != 8) throw csv::FileError(path.string() + ":" + std::to_string(i + 1) + ": expected 8 fields");
        try {
            auto opt = [](std::string_view s) { return csv::parse_optional_double(s).value_or(kMissing); };
            rows.push_back({std::string(f[0]), std::string(f[1]), opt(f[2]), opt(f[3]), opt(f[4]),
                            static_cast<std::size_t>(csv::parse_int(f[5])),
                            static_cast<std::size_t>(csv::parse_int(f[6])), opt(f[7])});
        } catch (const std::invalid_argument& e) {
            throw csv::FileError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace fearfactor::cross_section
