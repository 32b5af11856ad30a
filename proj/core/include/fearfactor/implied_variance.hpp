#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fearfactor/date.hpp"
#include "fearfactor/market_data.hpp"

namespace fearfactor::implied_variance {

enum class Measure { total, good, bad };

std::string to_string(Measure m);

/// Model-free implied variance for one (firm, date), annualized, with its call-side
/// (good) and put-side (bad) legs.
struct VarianceObservation {
    std::string firm_id;
    Date date;
    double total = 0.0;
    double good = 0.0;
    double bad = 0.0;
    int n_calls = 0;
    int n_puts = 0;
    double forward = 0.0;
    double k0 = 0.0;
    /// Every out-of-the-money strike sits on one side of k0; only one leg carries option mass.
    bool one_sided = false;
    /// The correction term exceeded the option mass. Kept, but excluded from factor input by default.
    bool negative_total = false;

    [[nodiscard]] double value(Measure m) const;
};

/// Discretized variance swap rate:
///   total = (2/T) sum_i dK_i / K_i^2 * e^{rT} Q(K_i) - (1/T) (F/K0 - 1)^2
/// over out-of-the-money strikes (puts below k0, calls above, the averaged straddle at
/// k0). dK is the centered half-difference inside the grid and one-sided at the ends.
/// The k0 term and the correction are split evenly between the good and bad legs, so
/// good + bad reproduces total up to rounding.
VarianceObservation compute_variance(const market_data::OptionChain& chain, double forward, double k0);
VarianceObservation compute_variance(const market_data::OptionChain& chain);

/// Firm-by-date panel with missing cells allowed.
class VariancePanel {
public:
    [[nodiscard]] const std::vector<std::string>& firms() const { return firms_; }
    [[nodiscard]] const std::vector<Date>& dates() const { return dates_; }
    [[nodiscard]] std::size_t size() const { return cells_.size(); }
    [[nodiscard]] std::size_t duplicate_count() const { return duplicates_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }

    /// nullptr when the cell is missing.
    [[nodiscard]] const VarianceObservation* find(std::size_t firm, std::size_t date) const;

    /// Dates x firms matrix of one measure, NaN where missing. Cells flagged
    /// negative_total are masked unless `keep_negative`.
    [[nodiscard]] Eigen::MatrixXd matrix(Measure m, bool keep_negative = false) const;

    /// Observations ordered by (date, firm).
    [[nodiscard]] std::vector<VarianceObservation> observations() const;

    /// Sub-panel for a subset of firms; firms not present are ignored.
    [[nodiscard]] VariancePanel select_firms(std::span<const std::string> ids) const;

private:
    friend VariancePanel build_panel(std::span<const VarianceObservation>);
    std::vector<std::string> firms_;
    std::vector<Date> dates_;
    std::map<std::pair<std::size_t, std::size_t>, VarianceObservation> cells_;  // (date, firm)
    std::size_t duplicates_ = 0;
    std::vector<std::string> warnings_;
};

/// Deduplicates on (firm, date); the later element wins and a warning is recorded.
/// Firms are ordered by id, dates ascending.
VariancePanel build_panel(std::span<const VarianceObservation> observations);

struct MeasureSummary {
    double mean = 0.0;                 // time-series average of daily cross-sectional means
    double std = 0.0;                  // time-series average of daily cross-sectional std (n-1)
    double avg_pairwise_cov = 0.0;     // NaN with fewer than two firms
};

struct PanelSummary {
    MeasureSummary total, good, bad;
    [[nodiscard]] const MeasureSummary& get(Measure m) const;
};

/// Throws std::invalid_argument on an empty panel.
PanelSummary panel_summary(const VariancePanel& panel);

/// Same statistics for a single dates x firms matrix with NaN for missing.
MeasureSummary summarize_matrix(const Eigen::MatrixXd& x);

inline constexpr const char* kPanelHeader = "firm_id,date,total,good,bad,n_calls,n_puts,forward,k0";

void write_panel_csv(std::ostream& out, const VariancePanel& panel);
VariancePanel read_panel_csv(const std::filesystem::path& path);

}  // namespace fearfactor::implied_variance
