#include "fearfactor/exposures.hpp"

#include <algorithm>
#include <map>

#include "fearfactor/csv.hpp"
#include "fearfactor/linalg.hpp"
#include "fearfactor/parallel.hpp"

namespace fearfactor::exposures {

using Eigen::Index;

BetaRun estimate_betas(std::span<const StockReturns> stocks, const NamedSeries& factor,
                       const std::optional<NamedSeries>& control, const BetaOptions& options) {
    const auto& grid = factor.series.dates;
    const auto& f = factor.series.values;
    const std::vector<double> c = control ? align_to(control->series, grid) : std::vector<double>{};
    const auto month_ends = month_end_indices(grid);
    const Index n_reg = control ? 3 : 2;
    const std::string control_name = control ? control->name : "none";

    struct PerStock {
        std::vector<ExposureEstimate> estimates;
        std::vector<std::string> diagnostics;
    };
    std::vector<PerStock> results(stocks.size());
    parallel_for(stocks.size(), [&](std::size_t s) {
        const auto r = align_to(stocks[s].returns, grid);
        std::vector<std::size_t> rows;
        for (auto end : month_ends) {
            const std::size_t start = end + 1 >= options.window ? end + 1 - options.window : 0;
            rows.clear();
            for (std::size_t t = start; t <= end; ++t) {
                if (is_missing(r[t]) || is_missing(f[t]) || (control && is_missing(c[t]))) continue;
                rows.push_back(t);
            }
            if (rows.size() < options.min_obs || rows.empty()) continue;
            Eigen::MatrixXd x(static_cast<Index>(rows.size()), n_reg);
            Eigen::VectorXd y(static_cast<Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto ii = static_cast<Index>(i);
                x(ii, 0) = 1.0;
                x(ii, 1) = f[rows[i]];
                if (control) x(ii, 2) = c[rows[i]];
                y(ii) = r[rows[i]];
            }
            const std::string tag = stocks[s].stock_id + " " + grid[end].to_string();
            if ((y.array() == y(0)).all()) {
                results[s].diagnostics.push_back(tag + ": constant return series, skipped");
                continue;
            }
            try {
                const auto fit = ols(x, y);
                ExposureEstimate e;
                e.stock_id = stocks[s].stock_id;
                e.as_of_month = grid[end];
                e.intercept = fit.coef(0);
                e.beta_cf = fit.coef(1);
                e.beta_control = control ? fit.coef(2) : kMissing;
                e.n_obs = static_cast<int>(rows.size());
                e.factor_name = factor.name;
                e.control_name = control_name;
                results[s].estimates.push_back(std::move(e));
            } catch (const SingularDesign& err) {
                results[s].diagnostics.push_back(tag + ": " + err.what());
            }
        }
    });

    BetaRun run;
    for (auto& r : results) {
        run.estimates.insert(run.estimates.end(), std::make_move_iterator(r.estimates.begin()),
                             std::make_move_iterator(r.estimates.end()));
        run.diagnostics.insert(run.diagnostics.end(), r.diagnostics.begin(), r.diagnostics.end());
    }
    std::stable_sort(run.estimates.begin(), run.estimates.end(), [](const auto& a, const auto& b) {
        if (a.as_of_month != b.as_of_month) return a.as_of_month < b.as_of_month;
        return a.stock_id < b.stock_id;
    });
    return run;
}

std::vector<StockReturns> group_returns(std::span<const market_data::StockRecord> records) {
    std::map<std::string, std::vector<std::pair<Date, double>>> by_id;
    for (const auto& r : records) by_id[r.stock_id].emplace_back(r.date, r.excess_return);
    std::vector<StockReturns> out;
    out.reserve(by_id.size());
    for (auto& [id, rows] : by_id) {
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        StockReturns s;
        s.stock_id = id;
        for (const auto& [d, v] : rows) {
            if (!s.returns.dates.empty() && s.returns.dates.back() == d) {
                s.returns.values.back() = v;  // duplicate date: keep the later row
                continue;
            }
            s.returns.dates.push_back(d);
            s.returns.values.push_back(v);
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_betas_csv(std::ostream& out, std::span<const ExposureEstimate> estimates) {
    out << kBetaHeader << '\n';
    for (const auto& e : estimates) {
        out << e.stock_id << ',' << e.as_of_month.to_string() << ',' << e.factor_name << ',' << e.control_name << ','
            << csv::format_double(e.beta_cf) << ',' << csv::format_double(e.beta_control) << ','
            << csv::format_double(e.intercept) << ',' << e.n_obs << '\n';
    }
}

std::vector<ExposureEstimate> read_betas_csv(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw csv::FileError(path.string() + ": empty file");
    const auto expected = csv::split(kBetaHeader);
    csv::expect_header(lines[0], expected, path);
    std::vector<ExposureEstimate> out;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto f = csv::split(lines[ln]);
        try {
            if (f.size() != expected.size()) throw std::invalid_argument("wrong field count");
            ExposureEstimate e;
            e.stock_id = std::string(f[0]);
            e.as_of_month = Date::parse(f[1]);
            e.factor_name = std::string(f[2]);
            e.control_name = std::string(f[3]);
            e.beta_cf = csv::parse_double(f[4]);
            e.beta_control = f[5].empty() ? kMissing : csv::parse_double(f[5]);
            e.intercept = csv::parse_double(f[6]);
            e.n_obs = static_cast<int>(csv::parse_int(f[7]));
            out.push_back(std::move(e));
        } catch (const std::exception& e) {
            throw csv::FileError(path.string() + ":" + std::to_string(ln + 1) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace fearfactor::exposures
