#ifndef MIPCR_SIMULATION_HPP
#define MIPCR_SIMULATION_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mipcr/data.hpp"

namespace mipcr {

/// One cell of the data-generating design. Items follow a simple-structure
/// factor model with equal loadings; the first factor carries the target
/// items and the missingness predictors, the remaining factors carry the
/// auxiliary items.
struct SimulationCondition {
    Index n = 500;
    int factors = 7;
    int targets = 4;       // first items of factor 1
    int mar_predictors = 4;  // remaining items of factor 1
    int items_per_other_factor = 8;
    double loading = 0.85;
    double high_corr = 0.7;
    double low_corr = 0.1;
    double pn = 0.0;                    // share of auxiliary factors weakly related to factor 1
    std::optional<int> n_categories;    // nullopt = continuous
    double target_mean = 5.0;
    double target_var = 6.5;
    double miss_prop = 0.3;

    void validate() const;
    /// Number of weakly correlated auxiliary factors (pn times their count).
    int low_factors() const;
    Index columns() const;
    /// e.g. "pn=0.33,ncat=inf".
    std::string id() const;
};

/// Latent correlation matrix. Pairs that involve one of the last
/// low_factors() factors get low_corr, all others high_corr.
Matrix factor_correlation(const SimulationCondition& cond);

struct GeneratedData {
    Matrix values;  // continuous, rescaled
    std::vector<ColumnRole> roles;
};

/// X = F L' + E with F ~ N(0, Psi) and E ~ N(0, 1 - loading^2), each
/// column then mapped exactly to the target mean and variance.
GeneratedData generate_complete(const SimulationCondition& cond, Rng& rng);

/// Equal-probability empirical-quantile bins coded 1..n_categories, applied
/// to every non-target column. Tied values share a code.
Matrix coarsen(const Matrix& values, const std::vector<ColumnRole>& roles, std::optional<int> n_categories);

/// Codes for one column.
Vector coarsen_column(const Vector& column, int n_categories);

double logistic(double x);

/// Intercept b such that mean(logistic(b + scores)) matches `proportion`
/// to within 1e-6 (bisection).
double calibrate_intercept(const Vector& scores, double proportion);

/// Standardized sum of the standardized mar-predictor columns of
/// `continuous`: the linear predictor of the response model before the
/// intercept.
Vector missingness_scores(const Matrix& continuous, const std::vector<ColumnRole>& roles);

struct Amputation {
    IncompleteData data;
    Vector scores;     // linear predictor without intercept
    double intercept = 0.0;
};

/// Right-tail MAR amputation of every analysis-target column. Response
/// probabilities come from the continuous data; the returned data carries
/// `values` (which may be coarsened). Each target gets its own Bernoulli
/// draws.
Amputation ampute(const Matrix& values, const Matrix& continuous, const std::vector<ColumnRole>& roles,
                  double miss_prop, Rng& rng);

/// Logistic refit of a missingness indicator on its predictors.
struct ResponseModelFit {
    double mcfadden_r2 = 0.0;
    double auc = 0.0;
    Vector coefficients;
};

ResponseModelFit fit_response_model(const Vector& indicator, const Matrix& predictors);

/// Area under the ROC curve of `score` for the binary `label` (ties count half).
double roc_auc(const Vector& score, const Vector& label);

/// Absolute percent relative bias against the mean of full-data estimates.
double compute_prb(std::span<const double> estimates, std::span<const double> full_estimates);
/// Mean of full-data estimates.
double true_value(std::span<const double> full_estimates);
double compute_ciw(std::span<const double> lower, std::span<const double> upper);
double compute_cic(std::span<const double> lower, std::span<const double> upper, double truth);

}  // namespace mipcr

#endif
