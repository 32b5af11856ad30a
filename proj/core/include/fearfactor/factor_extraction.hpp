#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fearfactor/errors.hpp"
#include "fearfactor/implied_variance.hpp"
#include "fearfactor/series.hpp"

namespace fearfactor::factors {

/// CF, CF_plus, CF_minus come from firm panels; MF, MF_plus, MF_minus from index chains.
enum class FactorName { CF, CF_plus, CF_minus, MF, MF_plus, MF_minus };

std::string to_string(FactorName f);
FactorName factor_name_from_string(const std::string& s);
/// Total -> CF, good -> CF_plus, bad -> CF_minus (or the MF family for `index`).
FactorName factor_for(implied_variance::Measure m, bool index = false);

struct FactorSeries {
    std::string name;
    std::vector<Date> dates;
    std::vector<double> levels;              // NaN where no window estimate exists
    std::vector<double> innovations;         // first differences; [0] is always NaN
    std::vector<double> variance_explained;  // per emitted window, NaN elsewhere

    [[nodiscard]] DatedSeries level_series() const { return {dates, levels}; }
    [[nodiscard]] DatedSeries innovation_series() const { return {dates, innovations}; }
};

/// Builds a series from already-observed levels (e.g. index implied variance).
FactorSeries series_from_levels(std::string name, std::vector<Date> dates, std::vector<double> levels);

struct EmPcaOptions {
    int k = 1;
    /// Stop once ||R_new - R_old||_F <= tol * ||R_new||_F for the rank-k reconstruction R.
    double tol = 1e-10;
    int max_iter = 1000;
    /// Minimum fraction of observed cells for a firm (column) to enter the estimation.
    double min_coverage = 0.8;
};

struct EmPcaResult {
    Eigen::MatrixXd factors;            // rows x k scores, scores = Z V
    Eigen::MatrixXd loadings;           // eligible firms x k, orthonormal columns
    Eigen::VectorXd variance_explained; // share of ||Z_filled||_F^2 per component
    std::vector<Eigen::Index> columns;  // input columns that were eligible
    int iterations = 0;
    bool converged = false;             // false means max_iter hit; result is the last iterate
    std::vector<double> objective;      // squared error on observed cells, per iteration
};

/// Principal components of a panel with missing cells (NaN) by alternating between
/// filling missing cells from the rank-k reconstruction and re-extracting the top k
/// components. Columns are standardized on their observed cells first, and missing
/// cells start at zero. Each component is signed to correlate non-negatively with
/// the row-wise mean of the raw observed cells.
/// Throws InsufficientData when fewer than two columns qualify.
EmPcaResult em_pca(const Eigen::MatrixXd& panel, const EmPcaOptions& options = {});

struct WindowSpec {
    int length = 252;
    int step = 1;
    double min_coverage = 0.8;
};

/// Window-end first-component scores over trailing windows. Window signs are chained:
/// a window whose scores correlate negatively with the previous estimated window
/// over their common rows is flipped. Windows without enough data leave NaN.
FactorSeries rolling_factor(const Eigen::MatrixXd& panel, const std::vector<Date>& dates, const WindowSpec& spec,
                            std::string name, EmPcaOptions options = {});

FactorSeries rolling_factor(const implied_variance::VariancePanel& panel, implied_variance::Measure measure,
                            const WindowSpec& spec, EmPcaOptions options = {});

/// Month-end level differences (first month NaN).
DatedSeries monthly_innovations(const FactorSeries& f);

/// Residuals of y on a constant and x over their common non-missing dates.
/// Throws InsufficientOverlap below `min_overlap` points.
DatedSeries orthogonalize(const DatedSeries& y, const DatedSeries& x, std::size_t min_overlap = 24);

/// Innovations of `cf` orthogonalized against innovations of `mf`.
DatedSeries orthogonalize(const FactorSeries& cf, const FactorSeries& mf, std::size_t min_overlap = 24);

/// Pearson correlation over each trailing `window` of `a`'s date grid (b aligned to
/// it); windows with fewer than `min_obs` joint observations are NaN. Output starts at
/// the first full window.
DatedSeries rolling_correlation(const DatedSeries& a, const DatedSeries& b, std::size_t window = 252,
                                std::size_t min_obs = 200);

inline constexpr const char* kFactorHeader = "name,date,level,innovation,variance_explained";

void write_factors_csv(std::ostream& out, const std::vector<FactorSeries>& series);
std::vector<FactorSeries> read_factors_csv(const std::filesystem::path& path);

}  // namespace fearfactor::factors
