#include "mipcr/imputers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mipcr {

namespace {

Matrix with_intercept(const Matrix& x) {
    Matrix d(x.rows(), x.cols() + 1);
    d.col(0).setOnes();
    d.rightCols(x.cols()) = x;
    return d;
}

struct NormalEquations {
    Eigen::LLT<Matrix> factor;
    Vector coefficients;
};

NormalEquations solve_normal_equations(const Vector& y, const Matrix& design, double ridge) {
    Matrix gram = Matrix::Zero(design.cols(), design.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose());
    gram.diagonal().array() += ridge;
    NormalEquations out;
    out.factor.compute(gram);  // reads the lower triangle
    if (out.factor.info() != Eigen::Success)
        throw NumericalError("normal equations are singular; increase the ridge");
    out.coefficients = out.factor.solve(design.transpose() * y);
    return out;
}

}  // namespace

Vector LinearModelDraw::linear_predictor(const Matrix& x) const {
    if (x.cols() != predictor_count())
        throw InputError("predictor matrix has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(predictor_count()));
    Vector out = x * coefficients.tail(predictor_count());
    out.array() += coefficients(0);
    return out;
}

void ImputerKind::validate() const {
    if (pmm_donors < 1) throw InputError("pmm needs at least one donor");
}

ImputerMethod parse_imputer_method(const std::string& text) {
    if (text == "bayesian-normal" || text == "norm") return ImputerMethod::bayesian_normal;
    if (text == "pmm") return ImputerMethod::pmm;
    throw InputError("unknown imputer '" + text + "'");
}

std::string to_string(ImputerMethod method) {
    return method == ImputerMethod::pmm ? "pmm" : "bayesian-normal";
}

Vector ridge_least_squares(const Vector& y, const Matrix& x, double ridge) {
    if (x.rows() != y.size()) throw InputError("design and response differ in length");
    return solve_normal_equations(y, with_intercept(x), ridge).coefficients;
}

LinearModelDraw draw_linear_params(const Vector& y_obs, const Matrix& x_obs, Rng& rng, double ridge) {
    const Index n = y_obs.size();
    if (x_obs.rows() != n) throw InputError("design and response differ in length");
    if (n < 3) throw InputError("imputation model needs at least 3 observed cases");
    if (!y_obs.allFinite() || !x_obs.allFinite()) throw InputError("non-finite value in imputation design");
    if (ridge < 0.0) throw InputError("ridge must be nonnegative");
    const Index df = n - x_obs.cols() - 1;
    if (df <= 0) throw NumericalError("overparameterized imputation model");

    const Matrix design = with_intercept(x_obs);
    const NormalEquations ne = solve_normal_equations(y_obs, design, ridge);
    const double rss = (y_obs - design * ne.coefficients).squaredNorm();

    std::chi_squared_distribution<double> chi2(static_cast<double>(df));
    const double sigma = std::max(std::sqrt(rss / chi2(rng)), std::numeric_limits<double>::min());

    std::normal_distribution<double> normal;
    Vector z(design.cols());
    for (Index k = 0; k < z.size(); ++k) z(k) = normal(rng);
    // gram = L L', so L'^{-1} z has covariance gram^{-1}.
    const Vector noise = ne.factor.matrixU().solve(z);

    LinearModelDraw out;
    out.coefficients = ne.coefficients + sigma * noise;
    out.residual_sd = sigma;
    out.ridge = ridge;
    return out;
}

Vector draw_predictive(const LinearModelDraw& params, const Matrix& x_mis, Rng& rng) {
    Vector out = params.linear_predictor(x_mis);
    std::normal_distribution<double> normal;
    for (Index i = 0; i < out.size(); ++i) out(i) += params.residual_sd * normal(rng);
    return out;
}

Vector pmm_impute(const Vector& y_obs, const Matrix& x_obs, const Matrix& x_mis, int donors, Rng& rng,
                  double ridge) {
    if (donors < 1) throw InputError("pmm needs at least one donor");
    if (donors > y_obs.size()) throw InputError("more pmm donors requested than observed cases");
    if (x_mis.cols() != x_obs.cols()) throw InputError("observed and missing predictor blocks differ in width");
    const LinearModelDraw params = draw_linear_params(y_obs, x_obs, rng, ridge);
    const Vector yhat_obs = params.linear_predictor(x_obs);
    const Vector yhat_mis = params.linear_predictor(x_mis);

    const auto n_obs = static_cast<std::size_t>(y_obs.size());
    const auto k = static_cast<std::size_t>(donors);
    std::vector<Index> order(n_obs);
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    Vector out(x_mis.rows());
    for (Index i = 0; i < x_mis.rows(); ++i) {
        std::iota(order.begin(), order.end(), Index{0});
        const double target = yhat_mis(i);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](Index a, Index b) {
                              const double da = std::abs(yhat_obs(a) - target);
                              const double db = std::abs(yhat_obs(b) - target);
                              return da < db || (da == db && a < b);
                          });
        out(i) = y_obs(order[pick(rng)]);
    }
    return out;
}

Vector impute_column(const ImputerKind& kind, const Vector& y_obs, const Matrix& x_obs, const Matrix& x_mis,
                     Rng& rng, double ridge) {
    if (kind.method == ImputerMethod::pmm)
        return pmm_impute(y_obs, x_obs, x_mis, std::min<int>(kind.pmm_donors, static_cast<int>(y_obs.size())),
                          rng, ridge);
    const LinearModelDraw params = draw_linear_params(y_obs, x_obs, rng, ridge);
    return draw_predictive(params, x_mis, rng);
}

}  // namespace mipcr
