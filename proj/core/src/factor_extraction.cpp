#include "fearfactor/factor_extraction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "fearfactor/csv.hpp"
#include "fearfactor/linalg.hpp"
#include "fearfactor/parallel.hpp"

namespace fearfactor::factors {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(FactorName f) {
    switch (f) {
        case FactorName::CF: return "CF";
        case FactorName::CF_plus: return "CF_plus";
        case FactorName::CF_minus: return "CF_minus";
        case FactorName::MF: return "MF";
        case FactorName::MF_plus: return "MF_plus";
        case FactorName::MF_minus: return "MF_minus";
    }
    return "?";
}

FactorName factor_name_from_string(const std::string& s) {
    for (auto f : {FactorName::CF, FactorName::CF_plus, FactorName::CF_minus, FactorName::MF, FactorName::MF_plus,
                   FactorName::MF_minus}) {
        if (to_string(f) == s) return f;
    }
    throw std::invalid_argument("unknown factor name '" + s + "'");
}

FactorName factor_for(implied_variance::Measure m, bool index) {
    using implied_variance::Measure;
    switch (m) {
        case Measure::total: return index ? FactorName::MF : FactorName::CF;
        case Measure::good: return index ? FactorName::MF_plus : FactorName::CF_plus;
        case Measure::bad: return index ? FactorName::MF_minus : FactorName::CF_minus;
    }
    return FactorName::CF;
}

FactorSeries series_from_levels(std::string name, std::vector<Date> dates, std::vector<double> levels) {
    FactorSeries f;
    f.name = std::move(name);
    f.dates = std::move(dates);
    f.levels = std::move(levels);
    f.innovations = first_differences(f.levels);
    f.variance_explained.assign(f.dates.size(), kMissing);
    return f;
}

namespace {

struct TopK {
    MatrixXd scores;    // rows x k
    MatrixXd loadings;  // cols x k
    VectorXd sq_singular;
};

// Top-k principal directions from the eigen-decomposition of the smaller Gram matrix.
TopK top_components(const MatrixXd& z, int k) {
    TopK out;
    const Index rows = z.rows(), cols = z.cols();
    if (rows <= cols) {
        MatrixXd gram = MatrixXd::Zero(rows, rows);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(z);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram.selfadjointView<Eigen::Lower>());
        out.sq_singular = es.eigenvalues().tail(k).reverse().cwiseMax(0.0);
        const MatrixXd u = es.eigenvectors().rightCols(k).rowwise().reverse();
        out.loadings = z.transpose() * u;
        for (int j = 0; j < k; ++j) {
            const double s = std::sqrt(out.sq_singular(j));
            if (s > 0.0) out.loadings.col(j) /= s;
        }
        out.scores = z * out.loadings;
    } else {
        MatrixXd gram = MatrixXd::Zero(cols, cols);
        gram.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram.selfadjointView<Eigen::Lower>());
        out.sq_singular = es.eigenvalues().tail(k).reverse().cwiseMax(0.0);
        out.loadings = es.eigenvectors().rightCols(k).rowwise().reverse();
        out.scores = z * out.loadings;
    }
    return out;
}

}  // namespace

EmPcaResult em_pca(const MatrixXd& panel, const EmPcaOptions& options) {
    if (options.k < 1) throw std::invalid_argument("em_pca: k must be >= 1");
    const Index rows = panel.rows();
    if (rows < 2) throw InsufficientData("em_pca: fewer than two rows");

    // Eligible columns: enough coverage and non-zero observed spread.
    std::vector<Index> cols;
    std::vector<double> means, sds;
    for (Index j = 0; j < panel.cols(); ++j) {
        double sum = 0.0;
        Index n = 0;
        for (Index t = 0; t < rows; ++t) {
            if (!std::isnan(panel(t, j))) {
                sum += panel(t, j);
                ++n;
            }
        }
        if (n < 2 || static_cast<double>(n) < options.min_coverage * static_cast<double>(rows)) continue;
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (Index t = 0; t < rows; ++t) {
            if (!std::isnan(panel(t, j))) sq += (panel(t, j) - mean) * (panel(t, j) - mean);
        }
        const double sd = std::sqrt(sq / static_cast<double>(n - 1));
        // Rounding leaves a tiny spread on constant columns; treat those as degenerate.
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) continue;
        cols.push_back(j);
        means.push_back(mean);
        sds.push_back(sd);
    }
    const Index n_cols = static_cast<Index>(cols.size());
    if (n_cols < 2) throw InsufficientData("em_pca: fewer than two eligible firms");
    const int k = static_cast<int>(std::min<Index>(options.k, std::min(rows, n_cols)));

    MatrixXd z(rows, n_cols);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> observed(rows, n_cols);
    bool any_missing = false;
    for (Index c = 0; c < n_cols; ++c) {
        for (Index t = 0; t < rows; ++t) {
            const double v = panel(t, cols[static_cast<std::size_t>(c)]);
            observed(t, c) = !std::isnan(v);
            any_missing = any_missing || !observed(t, c);
            z(t, c) = observed(t, c) ? (v - means[static_cast<std::size_t>(c)]) / sds[static_cast<std::size_t>(c)] : 0.0;
        }
    }

    EmPcaResult result;
    result.columns = cols;
    TopK pcs;
    MatrixXd recon;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        pcs = top_components(z, k);
        MatrixXd next = pcs.scores * pcs.loadings.transpose();
        double obj = 0.0;
        for (Index c = 0; c < n_cols; ++c)
            for (Index t = 0; t < rows; ++t)
                if (observed(t, c)) obj += (z(t, c) - next(t, c)) * (z(t, c) - next(t, c));
        result.objective.push_back(obj);
        result.iterations = iter;
        if (!any_missing) {
            result.converged = true;
            break;
        }
        const bool done = iter > 1 && (next - recon).norm() <= options.tol * std::max(next.norm(), 1e-300);
        recon = std::move(next);
        for (Index c = 0; c < n_cols; ++c)
            for (Index t = 0; t < rows; ++t)
                if (!observed(t, c)) z(t, c) = recon(t, c);
        if (done) {
            result.converged = true;
            pcs = top_components(z, k);
            break;
        }
    }

    const double total_ss = z.squaredNorm();
    result.factors = pcs.scores;
    result.loadings = pcs.loadings;
    result.variance_explained = total_ss > 0.0 ? VectorXd(pcs.sq_singular / total_ss) : VectorXd::Zero(k);

    // Sign convention against the row-wise mean of the raw observed cells.
    VectorXd row_mean(rows);
    for (Index t = 0; t < rows; ++t) {
        double s = 0.0;
        int n = 0;
        for (Index c = 0; c < n_cols; ++c) {
            const double v = panel(t, cols[static_cast<std::size_t>(c)]);
            if (!std::isnan(v)) {
                s += v;
                ++n;
            }
        }
        row_mean(t) = n ? s / n : 0.0;
    }
    for (int j = 0; j < k; ++j) {
        const double r = correlation(result.factors.col(j), row_mean);
        if (r < 0.0) {
            result.factors.col(j) *= -1.0;
            result.loadings.col(j) *= -1.0;
        }
    }
    return result;
}

FactorSeries rolling_factor(const MatrixXd& panel, const std::vector<Date>& dates, const WindowSpec& spec,
                            std::string name, EmPcaOptions options) {
    if (spec.length < 2) throw std::invalid_argument("rolling_factor: window length must be >= 2");
    if (spec.step < 1) throw std::invalid_argument("rolling_factor: step must be >= 1");
    if (!(spec.min_coverage > 0.0 && spec.min_coverage <= 1.0))
        throw std::invalid_argument("rolling_factor: min_coverage must be in (0, 1]");
    if (static_cast<std::size_t>(panel.rows()) != dates.size())
        throw std::invalid_argument("rolling_factor: panel rows and dates differ");
    options.k = 1;
    options.min_coverage = spec.min_coverage;

    const Index rows = panel.rows();
    const Index len = spec.length;
    FactorSeries out;
    out.name = std::move(name);
    out.dates = dates;
    out.levels.assign(dates.size(), kMissing);
    out.variance_explained.assign(dates.size(), kMissing);
    if (rows < len) {
        out.innovations = first_differences(out.levels);
        return out;
    }

    std::vector<Index> ends;
    for (Index end = len - 1; end < rows; end += spec.step) ends.push_back(end);
    struct Window {
        bool ok = false;
        VectorXd scores;
        double explained = kMissing;
    };
    std::vector<Window> windows(ends.size());
    parallel_for(ends.size(), [&](std::size_t w) {
        const Index start = ends[w] - len + 1;
        try {
            auto res = em_pca(panel.middleRows(start, len), options);
            windows[w].scores = res.factors.col(0);
            windows[w].explained = res.variance_explained(0);
            windows[w].ok = true;
        } catch (const InsufficientData&) {
        }
    });

    // Sequential sign chaining.
    std::ptrdiff_t prev = -1;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        auto& win = windows[w];
        if (!win.ok) continue;
        if (prev >= 0) {
            const auto& pw = windows[static_cast<std::size_t>(prev)];
            const Index start = ends[w] - len + 1;
            const Index pstart = ends[static_cast<std::size_t>(prev)] - len + 1;
            const Index overlap = ends[static_cast<std::size_t>(prev)] - start + 1;
            if (overlap >= 2) {
                const VectorXd a = win.scores.head(overlap);
                const VectorXd b = pw.scores.segment(start - pstart, overlap);
                if (a.dot(b) < 0.0) win.scores *= -1.0;
            }
        }
        prev = static_cast<std::ptrdiff_t>(w);
        out.levels[static_cast<std::size_t>(ends[w])] = win.scores(len - 1);
        out.variance_explained[static_cast<std::size_t>(ends[w])] = win.explained;
    }
    out.innovations = first_differences(out.levels);
    return out;
}

FactorSeries rolling_factor(const implied_variance::VariancePanel& panel, implied_variance::Measure measure,
                            const WindowSpec& spec, EmPcaOptions options) {
    return rolling_factor(panel.matrix(measure), panel.dates(), spec, to_string(factor_for(measure)), options);
}

DatedSeries monthly_innovations(const FactorSeries& f) {
    DatedSeries out;
    const auto ends = month_end_indices(f.dates);
    double prev = kMissing;
    for (auto i : ends) {
        out.dates.push_back(f.dates[i]);
        out.values.push_back(f.levels[i] - prev);
        prev = f.levels[i];
    }
    return out;
}

DatedSeries orthogonalize(const DatedSeries& y, const DatedSeries& x, std::size_t min_overlap) {
    const auto xa = align_to(x, y.dates);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < y.dates.size(); ++i) {
        if (!is_missing(y.values[i]) && !is_missing(xa[i])) idx.push_back(i);
    }
    if (idx.size() < min_overlap)
        throw InsufficientOverlap("orthogonalize: " + std::to_string(idx.size()) + " overlapping points, need " +
                                  std::to_string(min_overlap));
    MatrixXd design(static_cast<Index>(idx.size()), 2);
    VectorXd response(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
        design(static_cast<Index>(r), 0) = 1.0;
        design(static_cast<Index>(r), 1) = xa[idx[r]];
        response(static_cast<Index>(r)) = y.values[idx[r]];
    }
    // lstsq rather than ols(): a constant regressor is allowed and just drops out.
    const VectorXd coef = design.completeOrthogonalDecomposition().solve(response);
    const VectorXd resid = response - design * coef;
    DatedSeries out;
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.dates.push_back(y.dates[idx[r]]);
        out.values.push_back(resid(static_cast<Index>(r)));
    }
    return out;
}

DatedSeries orthogonalize(const FactorSeries& cf, const FactorSeries& mf, std::size_t min_overlap) {
    return orthogonalize(cf.innovation_series(), mf.innovation_series(), min_overlap);
}

DatedSeries rolling_correlation(const DatedSeries& a, const DatedSeries& b, std::size_t window, std::size_t min_obs) {
    if (window < 2) throw std::invalid_argument("rolling_correlation: window must be >= 2");
    const auto bv = align_to(b, a.dates);
    DatedSeries out;
    for (std::size_t end = window - 1; end < a.dates.size(); ++end) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        std::size_t n = 0;
        for (std::size_t t = end + 1 - window; t <= end; ++t) {
            const double x = a.values[t], y = bv[t];
            if (is_missing(x) || is_missing(y)) continue;
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
            sab += x * y;
            ++n;
        }
        double r = kMissing;
        if (n >= min_obs && n >= 2) {
            const double dn = static_cast<double>(n);
            const double cov = sab - sa * sb / dn;
            const double va = saa - sa * sa / dn;
            const double vb = sbb - sb * sb / dn;
            if (va > 0.0 && vb > 0.0) r = std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
        }
        out.dates.push_back(a.dates[end]);
        out.values.push_back(r);
    }
    return out;
}

void write_factors_csv(std::ostream& out, const std::vector<FactorSeries>& series) {
    out << kFactorHeader << '\n';
    for (const auto& f : series) {
        for (std::size_t i = 0; i < f.dates.size(); ++i) {
            out << f.name << ',' << f.dates[i].to_string() << ',' << csv::format_double(f.levels[i]) << ','
                << csv::format_double(f.innovations[i]) << ',' << csv::format_double(f.variance_explained[i]) << '\n';
        }
    }
}

std::vector<FactorSeries> read_factors_csv(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw csv::FileError(path.string() + ": empty file");
    const auto expected = csv::split(kFactorHeader);
    csv::expect_header(lines[0], expected, path);
    std::vector<FactorSeries> out;
    std::map<std::string, std::size_t> index;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto f = csv::split(lines[ln]);
        try {
            if (f.size() != expected.size()) throw std::invalid_argument("wrong field count");
            const std::string name(f[0]);
            auto [it, inserted] = index.emplace(name, out.size());
            if (inserted) {
                out.emplace_back();
                out.back().name = name;
            }
            auto& s = out[it->second];
            s.dates.push_back(Date::parse(f[1]));
            auto opt = [](std::string_view v) { return v.empty() ? kMissing : csv::parse_double(v); };
            s.levels.push_back(opt(f[2]));
            s.innovations.push_back(opt(f[3]));
            s.variance_explained.push_back(opt(f[4]));
        } catch (const std::exception& e) {
            throw csv::FileError(path.string() + ":" + std::to_string(ln + 1) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace fearfactor::factors
