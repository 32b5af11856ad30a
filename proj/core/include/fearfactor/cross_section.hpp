#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fearfactor/errors.hpp"
#include "fearfactor/hac.hpp"
#include "fearfactor/series.hpp"

namespace fearfactor::cross_section {

/// Named columns on a shared date grid (rows), NaN for missing cells.
struct DatedMatrix {
    std::vector<Date> dates;
    std::vector<std::string> names;
    Eigen::MatrixXd values;  // dates x names

    [[nodiscard]] Eigen::Index column(const std::string& name) const;
    [[nodiscard]] DatedSeries series(Eigen::Index col) const;
};

DatedMatrix read_dated_matrix(const std::filesystem::path& path);
void write_dated_matrix(std::ostream& out, const DatedMatrix& m);

/// Joins monthly panels on calendar month and keeps the months where every cell of
/// both is observed. Returned dates are those of `a`.
std::pair<DatedMatrix, DatedMatrix> align_monthly(const DatedMatrix& a, const DatedMatrix& b);

struct Premium {
    std::string name;
    double lambda = 0.0;
    double t_stat = 0.0;
};

/// Premia are in the units of the inputs (decimal returns give decimal premia).
struct RiskPremiumEstimate {
    std::string factor_name;  // first pricing factor
    double lambda = 0.0;
    double t_stat = 0.0;
    double intercept = 0.0;
    double intercept_t = 0.0;
    std::vector<Premium> companions;  // remaining pricing factors in input order
    double adj_r2 = 0.0;
    std::size_t n_assets = 0;
    std::size_t n_months = 0;
    double shanken = 1.0;
    double beta_condition = 0.0;
};

/// Two-pass regression. Pass 1 estimates full-sample betas by time-series OLS of each
/// asset on a constant and all factors; pass 2 is a single cross-sectional OLS of
/// average returns on a constant and the betas. Standard errors come from the
/// month-by-month cross-sectional estimates: Var(lambda_k) = c * NW(lambda_kt) +
/// Sigma_f[k,k] / T with the Shanken multiplier c; the intercept gets c * NW only.
/// Throws SingularDesign (with the beta condition number) on rank-deficient betas.
RiskPremiumEstimate fama_macbeth(const DatedMatrix& assets, const DatedMatrix& factors, int nw_lags = 12);

struct MimickingPortfolio {
    std::string factor_name;
    std::vector<std::string> base_asset_ids;
    Eigen::VectorXd weights;     // zero for dropped collinear assets
    Eigen::VectorXd weight_se;   // conventional OLS standard errors (NaN when dropped)
    double intercept = 0.0;
    std::size_t n_obs = 0;
    std::vector<std::string> warnings;
    DatedSeries daily_returns;    // weights . base returns
    DatedSeries monthly_returns;  // within-month mean of daily_returns, dated at the month's last day
};

/// Projects daily factor innovations on a constant and the base assets' daily excess
/// returns. Base assets that are collinear with the ones before them in pivot order
/// are dropped with a warning. Throws InsufficientOverlap below `min_overlap` days.
MimickingPortfolio mimicking_portfolio(const std::string& factor_name, const DatedSeries& innovations,
                                       const DatedMatrix& base_daily, std::size_t min_overlap = 252);

struct ThreePassResult {
    std::string factor_name;
    double lambda = 0.0;
    double t_stat = 0.0;
    double wald_stat = 0.0;
    double weak_factor_p = 1.0;
    double lambda_market = kMissing;
    double t_market = kMissing;
    double market_weak_p = kMissing;
    double adj_r2 = 0.0;
    int n_latent_factors = 0;
    std::size_t n_assets = 0;
    std::size_t n_months = 0;
    Eigen::VectorXd latent_premia;
    std::vector<double> eigenvalues;  // of the demeaned return second-moment matrix, descending
};

struct ThreePassOptions {
    std::optional<int> n_latent;  // eigenvalue-ratio choice when empty
    int max_latent = 10;
    int nw_lags = 12;
};

/// Latent-factor risk premium of an observable factor. Pass 1: principal components
/// of demeaned asset returns give latent factors V (normalized to V V'/T = I) and
/// loadings. Pass 2: average returns on loadings without a constant give latent
/// premia gamma. Pass 3: the demeaned observable on V gives eta; lambda = eta gamma.
/// The t-statistic uses the Newey-West long-run variance of
///   psi_t = eta v_t + z_t v_t' gamma   (z: pass-3 residual);
/// the weak-factor Wald statistic T eta Omega^{-1} eta' with Omega the long-run
/// variance of z_t v_t is referred to chi-square(p).
/// `market` (optional, may be empty) is priced the same way for lambda_market.
ThreePassResult three_pass(const DatedMatrix& assets, const DatedSeries& observable, const DatedSeries& market,
                           const ThreePassOptions& options = {});

/// Eigenvalue-ratio choice: the k <= kmax maximizing mu_k / mu_{k+1}.
int eigenvalue_ratio_count(const std::vector<double>& eigenvalues, int kmax);

/// One row of premia.csv; lambda stored in percent per month.
struct PremiumRow {
    std::string spec_id;
    std::string factor_name;
    double lambda_pct = 0.0;
    double t_stat = 0.0;
    double adj_r2 = 0.0;
    std::size_t n_assets = 0;
    std::size_t n_months = 0;
    double wald_p = kMissing;
};

inline constexpr const char* kPremiaHeader = "spec_id,factor_name,lambda,t_stat,adj_r2,n_assets,n_months,wald_p";
std::vector<PremiumRow> premium_rows(const RiskPremiumEstimate& e, const std::string& spec_id);
std::vector<PremiumRow> premium_rows(const ThreePassResult& r, const std::string& spec_id);
void write_premia_csv(std::ostream& out, const std::vector<PremiumRow>& rows);
std::vector<PremiumRow> read_premia_csv(const std::filesystem::path& path);

}  // namespace fearfactor::cross_section
