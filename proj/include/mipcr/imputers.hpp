#ifndef MIPCR_IMPUTERS_HPP
#define MIPCR_IMPUTERS_HPP

#include <string>

#include "mipcr/types.hpp"

namespace mipcr {

/// Default ridge added to the normal equations.
inline constexpr double kDefaultRidge = 1e-5;

/// One draw of the imputation model parameters: intercept followed by one
/// slope per predictor, and the residual standard deviation.
struct LinearModelDraw {
    Vector coefficients;
    double residual_sd = 1.0;
    double ridge = kDefaultRidge;

    Index predictor_count() const { return coefficients.size() - 1; }
    /// intercept + x * slopes for every row of x.
    Vector linear_predictor(const Matrix& x) const;
};

enum class ImputerMethod { bayesian_normal, pmm };

struct ImputerKind {
    ImputerMethod method = ImputerMethod::bayesian_normal;
    int pmm_donors = 5;

    void validate() const;
};

ImputerMethod parse_imputer_method(const std::string& text);
std::string to_string(ImputerMethod method);

/// Ridge-stabilized least squares with an intercept column prepended:
/// solves (D'D + ridge I) b = D'y.
Vector ridge_least_squares(const Vector& y, const Matrix& x, double ridge = kDefaultRidge);

/// Draws (beta, sigma) from the posterior of the normal linear model under
/// the standard noninformative prior: sigma^2 = RSS / chi^2(n - r - 1), then
/// beta ~ N(b_hat, sigma^2 (D'D + ridge I)^-1).
LinearModelDraw draw_linear_params(const Vector& y_obs, const Matrix& x_obs, Rng& rng,
                                   double ridge = kDefaultRidge);

/// Posterior predictive draws at the rows of x_mis.
Vector draw_predictive(const LinearModelDraw& params, const Matrix& x_mis, Rng& rng);

/// Predictive mean matching. One parameter draw gives predicted means for
/// observed and missing rows; each missing row takes the observed value of a
/// donor chosen uniformly among the `donors` closest predicted means.
Vector pmm_impute(const Vector& y_obs, const Matrix& x_obs, const Matrix& x_mis, int donors, Rng& rng,
                  double ridge = kDefaultRidge);

/// Dispatches on the imputer kind.
Vector impute_column(const ImputerKind& kind, const Vector& y_obs, const Matrix& x_obs, const Matrix& x_mis,
                     Rng& rng, double ridge = kDefaultRidge);

}  // namespace mipcr

#endif
