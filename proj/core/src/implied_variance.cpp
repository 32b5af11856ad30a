#include "fearfactor/implied_variance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "fearfactor/csv.hpp"

namespace fearfactor::implied_variance {

using market_data::OptionChain;
using market_data::Right;

std::string to_string(Measure m) {
    switch (m) {
        case Measure::total: return "total";
        case Measure::good: return "good";
        case Measure::bad: return "bad";
    }
    return "?";
}

double VarianceObservation::value(Measure m) const {
    switch (m) {
        case Measure::total: return total;
        case Measure::good: return good;
        case Measure::bad: return bad;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

VarianceObservation compute_variance(const OptionChain& chain, double forward, double k0) {
    const double maturity = chain.maturity();
    if (!(maturity > 0.0)) throw std::invalid_argument("compute_variance: non-positive maturity");
    if (!(forward > 0.0) || !(k0 > 0.0)) throw std::invalid_argument("compute_variance: forward and k0 must be positive");

    struct Node {
        double strike;
        double q_sum = 0.0;
        int count = 0;
        bool has_call = false, has_put = false;
    };
    std::vector<Node> nodes;
    for (const auto& q : chain.quotes) {
        const bool otm = (q.right == Right::put && q.strike <= k0) || (q.right == Right::call && q.strike >= k0);
        if (!otm) continue;
        auto it = std::lower_bound(nodes.begin(), nodes.end(), q.strike,
                                   [](const Node& n, double k) { return n.strike < k; });
        if (it == nodes.end() || it->strike != q.strike) it = nodes.insert(it, Node{q.strike});
        it->q_sum += q.mid();
        ++it->count;
        (q.right == Right::call ? it->has_call : it->has_put) = true;
    }

    VarianceObservation obs;
    obs.firm_id = chain.underlying_id;
    obs.date = chain.quote_date;
    obs.forward = forward;
    obs.k0 = k0;

    const double growth = std::exp(chain.risk_free_rate * maturity);
    const std::size_t n = nodes.size();
    double good_mass = 0.0, bad_mass = 0.0, atm_mass = 0.0;
    bool any_below = false, any_above = false;
    for (std::size_t i = 0; i < n; ++i) {
        double dk = 0.0;
        if (n >= 2) {
            if (i == 0) dk = nodes[1].strike - nodes[0].strike;
            else if (i + 1 == n) dk = nodes[n - 1].strike - nodes[n - 2].strike;
            else dk = 0.5 * (nodes[i + 1].strike - nodes[i - 1].strike);
        }
        const double k = nodes[i].strike;
        const double q = nodes[i].q_sum / nodes[i].count;
        const double term = (2.0 / maturity) * dk / (k * k) * growth * q;
        if (k < k0) {
            bad_mass += term;
            any_below = true;
            ++obs.n_puts;
        } else if (k > k0) {
            good_mass += term;
            any_above = true;
            ++obs.n_calls;
        } else {
            atm_mass += term;
            obs.n_calls += nodes[i].has_call ? 1 : 0;
            obs.n_puts += nodes[i].has_put ? 1 : 0;
        }
    }
    const double correction = (1.0 / maturity) * (forward / k0 - 1.0) * (forward / k0 - 1.0);
    obs.good = good_mass + 0.5 * atm_mass - 0.5 * correction;
    obs.bad = bad_mass + 0.5 * atm_mass - 0.5 * correction;
    obs.total = bad_mass + atm_mass + good_mass - correction;
    obs.one_sided = !(any_below && any_above);
    obs.negative_total = obs.total < 0.0;
    return obs;
}

VarianceObservation compute_variance(const OptionChain& chain) {
    return compute_variance(chain, chain.forward, chain.k0);
}

const VarianceObservation* VariancePanel::find(std::size_t firm, std::size_t date) const {
    auto it = cells_.find({date, firm});
    return it == cells_.end() ? nullptr : &it->second;
}

Eigen::MatrixXd VariancePanel::matrix(Measure m, bool keep_negative) const {
    Eigen::MatrixXd x = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(dates_.size()),
                                                  static_cast<Eigen::Index>(firms_.size()),
                                                  std::numeric_limits<double>::quiet_NaN());
    for (const auto& [key, obs] : cells_) {
        if (obs.negative_total && !keep_negative) continue;
        x(static_cast<Eigen::Index>(key.first), static_cast<Eigen::Index>(key.second)) = obs.value(m);
    }
    return x;
}

std::vector<VarianceObservation> VariancePanel::observations() const {
    std::vector<VarianceObservation> out;
    out.reserve(cells_.size());
    for (const auto& [key, obs] : cells_) out.push_back(obs);
    return out;
}

VariancePanel VariancePanel::select_firms(std::span<const std::string> ids) const {
    const std::set<std::string> wanted(ids.begin(), ids.end());
    std::vector<VarianceObservation> kept;
    for (const auto& [key, obs] : cells_) {
        if (wanted.count(obs.firm_id)) kept.push_back(obs);
    }
    return build_panel(kept);
}

VariancePanel build_panel(std::span<const VarianceObservation> observations) {
    VariancePanel panel;
    std::set<std::string> firms;
    std::set<Date> dates;
    for (const auto& o : observations) {
        firms.insert(o.firm_id);
        dates.insert(o.date);
    }
    panel.firms_.assign(firms.begin(), firms.end());
    panel.dates_.assign(dates.begin(), dates.end());
    for (const auto& o : observations) {
        const auto f = static_cast<std::size_t>(
            std::lower_bound(panel.firms_.begin(), panel.firms_.end(), o.firm_id) - panel.firms_.begin());
        const auto d = static_cast<std::size_t>(
            std::lower_bound(panel.dates_.begin(), panel.dates_.end(), o.date) - panel.dates_.begin());
        auto [it, inserted] = panel.cells_.insert_or_assign({d, f}, o);
        if (!inserted) {
            ++panel.duplicates_;
            panel.warnings_.push_back("duplicate cell " + o.firm_id + " " + o.date.to_string() + ": later value kept");
        }
    }
    return panel;
}

const MeasureSummary& PanelSummary::get(Measure m) const {
    switch (m) {
        case Measure::total: return total;
        case Measure::good: return good;
        case Measure::bad: return bad;
    }
    return total;
}

MeasureSummary summarize_matrix(const Eigen::MatrixXd& x) {
    using Eigen::Index;
    MeasureSummary s;
    double mean_acc = 0.0, std_acc = 0.0;
    int mean_days = 0, std_days = 0;
    for (Index t = 0; t < x.rows(); ++t) {
        double sum = 0.0, sq = 0.0;
        int n = 0;
        for (Index i = 0; i < x.cols(); ++i) {
            const double v = x(t, i);
            if (std::isnan(v)) continue;
            sum += v;
            ++n;
        }
        if (n == 0) continue;
        const double m = sum / n;
        mean_acc += m;
        ++mean_days;
        if (n < 2) continue;
        for (Index i = 0; i < x.cols(); ++i) {
            const double v = x(t, i);
            if (!std::isnan(v)) sq += (v - m) * (v - m);
        }
        std_acc += std::sqrt(sq / (n - 1));
        ++std_days;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.mean = mean_days ? mean_acc / mean_days : nan;
    s.std = std_days ? std_acc / std_days : nan;

    // Pairwise-complete covariances from mask products.
    const Index n = x.cols();
    s.avg_pairwise_cov = nan;
    if (n < 2) return s;
    Eigen::MatrixXd mask = x.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : 1.0; });
    Eigen::MatrixXd filled = x.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : v; });
    const Eigen::MatrixXd counts = mask.transpose() * mask;
    const Eigen::MatrixXd sxy = filled.transpose() * filled;
    const Eigen::MatrixXd sx = filled.transpose() * mask;  // (i,j): sum of x_i where both observed
    double acc = 0.0;
    long pairs = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const double c = counts(i, j);
            if (c < 2.0) continue;
            acc += (sxy(i, j) - sx(i, j) * sx(j, i) / c) / (c - 1.0);
            ++pairs;
        }
    }
    if (pairs > 0) s.avg_pairwise_cov = acc / static_cast<double>(pairs);
    return s;
}

PanelSummary panel_summary(const VariancePanel& panel) {
    if (panel.size() == 0) throw std::invalid_argument("panel_summary: empty panel");
    PanelSummary s;
    s.total = summarize_matrix(panel.matrix(Measure::total, true));
    s.good = summarize_matrix(panel.matrix(Measure::good, true));
    s.bad = summarize_matrix(panel.matrix(Measure::bad, true));
    return s;
}

void write_panel_csv(std::ostream& out, const VariancePanel& panel) {
    out << kPanelHeader << '\n';
    for (const auto& o : panel.observations()) {
        out << o.firm_id << ',' << o.date.to_string() << ',' << csv::format_double(o.total) << ','
            << csv::format_double(o.good) << ',' << csv::format_double(o.bad) << ',' << o.n_calls << ',' << o.n_puts
            << ',' << csv::format_double(o.forward) << ',' << csv::format_double(o.k0) << '\n';
    }
}

VariancePanel read_panel_csv(const std::filesystem::path& path) {
    const auto lines = csv::read_lines(path);
    if (lines.empty()) throw csv::FileError(path.string() + ": empty file");
    const auto expected = csv::split(kPanelHeader);
    csv::expect_header(lines[0], expected, path);
    std::vector<VarianceObservation> obs;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto f = csv::split(lines[ln]);
        try {
            if (f.size() != expected.size()) throw std::invalid_argument("wrong field count");
            VarianceObservation o;
            o.firm_id = std::string(f[0]);
            o.date = Date::parse(f[1]);
            o.total = csv::parse_double(f[2]);
            o.good = csv::parse_double(f[3]);
            o.bad = csv::parse_double(f[4]);
            o.n_calls = static_cast<int>(csv::parse_int(f[5]));
            o.n_puts = static_cast<int>(csv::parse_int(f[6]));
            o.forward = csv::parse_double(f[7]);
            o.k0 = csv::parse_double(f[8]);
            o.negative_total = o.total < 0.0;
            o.one_sided = o.n_calls == 0 || o.n_puts == 0;
            obs.push_back(std::move(o));
        } catch (const std::exception& e) {
            throw csv::FileError(path.string() + ":" + std::to_string(ln + 1) + ": " + e.what());
        }
    }
    return build_panel(obs);
}

}  // namespace fearfactor::implied_variance
