#include "mipcr/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mipcr/pca.hpp"

namespace mipcr {

void SimulationCondition::validate() const {
    if (n < 10) throw InputError("simulation needs at least 10 rows");
    if (factors < 1) throw InputError("simulation needs at least one factor");
    if (targets < 2) throw InputError("simulation needs at least two target items");
    if (mar_predictors < 1) throw InputError("simulation needs at least one mar predictor");
    if (items_per_other_factor < 1) throw InputError("items per auxiliary factor must be positive");
    if (!(loading > 0.0 && loading < 1.0)) throw InputError("loading must lie in (0, 1)");
    if (!(std::abs(high_corr) < 1.0) || !(std::abs(low_corr) < 1.0))
        throw InputError("factor correlations must lie in (-1, 1)");
    if (!(pn >= 0.0 && pn <= 1.0)) throw InputError("pn must lie in [0, 1]");
    const double count = pn * (factors - 1);
    if (std::abs(count - std::round(count)) > 0.05)
        throw InputError("pn times the number of auxiliary factors must be a whole number");
    if (n_categories && *n_categories < 2) throw InputError("nCat must be at least 2");
    if (!(target_var > 0.0)) throw InputError("target variance must be positive");
    if (!(miss_prop > 0.0 && miss_prop < 1.0)) throw InputError("missing proportion must lie in (0, 1)");
}

int SimulationCondition::low_factors() const { return static_cast<int>(std::lround(pn * (factors - 1))); }

Index SimulationCondition::columns() const {
    return targets + mar_predictors + static_cast<Index>(factors - 1) * items_per_other_factor;
}

std::string SimulationCondition::id() const {
    std::ostringstream os;
    os.precision(2);
    os << "pn=" << pn << ",ncat=";
    if (n_categories)
        os << *n_categories;
    else
        os << "inf";
    return os.str();
}

Matrix factor_correlation(const SimulationCondition& cond) {
    const int k = cond.factors;
    const int first_low = k - cond.low_factors();
    Matrix psi(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
            psi(a, b) = a == b ? 1.0 : (a >= first_low || b >= first_low ? cond.low_corr : cond.high_corr);
    return psi;
}

GeneratedData generate_complete(const SimulationCondition& cond, Rng& rng) {
    cond.validate();
    const Matrix psi = factor_correlation(cond);
    Eigen::LLT<Matrix> chol(psi);
    if (chol.info() != Eigen::Success) throw InputError("latent correlation matrix is not positive definite");
    const Matrix lower = chol.matrixL();

    const Index n = cond.n;
    const Index p = cond.columns();
    std::normal_distribution<double> normal;
    Matrix z(n, cond.factors);
    for (Index f = 0; f < z.cols(); ++f)
        for (Index i = 0; i < n; ++i) z(i, f) = normal(rng);
    const Matrix scores = z * lower.transpose();

    std::vector<int> factor_of(static_cast<std::size_t>(p));
    GeneratedData out;
    out.roles.resize(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) {
        const Index first_block = cond.targets + cond.mar_predictors;
        factor_of[static_cast<std::size_t>(j)] =
            j < first_block ? 0 : 1 + static_cast<int>((j - first_block) / cond.items_per_other_factor);
        out.roles[static_cast<std::size_t>(j)] = j < cond.targets ? ColumnRole::analysis_target
                                                 : j < first_block ? ColumnRole::mar_predictor
                                                                   : ColumnRole::auxiliary;
    }

    const double error_sd = std::sqrt(1.0 - cond.loading * cond.loading);
    out.values.resize(n, p);
    for (Index j = 0; j < p; ++j) {
        const Index f = factor_of[static_cast<std::size_t>(j)];
        for (Index i = 0; i < n; ++i) out.values(i, j) = cond.loading * scores(i, f) + error_sd * normal(rng);
    }
    const Standardized s = standardize(out.values);
    out.values = (s.values.array() * std::sqrt(cond.target_var) + cond.target_mean).matrix();
    return out;
}

Vector coarsen_column(const Vector& column, int n_categories) {
    if (n_categories < 2) throw InputError("nCat must be at least 2");
    const Index n = column.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return column(a) < column(b); });
    Vector codes(n);
    Index rank = 0;
    for (Index k = 0; k < n; ++k) {
        // Ties take the rank of their first occurrence so order is preserved.
        if (k == 0 || column(order[static_cast<std::size_t>(k)]) != column(order[static_cast<std::size_t>(k - 1)]))
            rank = k;
        const Index code = 1 + (rank * n_categories) / n;
        codes(order[static_cast<std::size_t>(k)]) = static_cast<double>(std::min<Index>(code, n_categories));
    }
    return codes;
}

Matrix coarsen(const Matrix& values, const std::vector<ColumnRole>& roles, std::optional<int> n_categories) {
    if (static_cast<Index>(roles.size()) != values.cols()) throw InputError("role count does not match column count");
    if (!n_categories) return values;
    Matrix out = values;
    for (Index j = 0; j < values.cols(); ++j)
        if (roles[static_cast<std::size_t>(j)] != ColumnRole::analysis_target)
            out.col(j) = coarsen_column(values.col(j), *n_categories);
    return out;
}

double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double calibrate_intercept(const Vector& scores, double proportion) {
    if (!(proportion > 0.0 && proportion < 1.0)) throw InputError("target proportion must lie in (0, 1)");
    if (scores.size() == 0 || !scores.allFinite()) throw InputError("scores must be finite and non-empty");
    auto expected = [&](double b) {
        double sum = 0.0;
        for (Index i = 0; i < scores.size(); ++i) sum += logistic(b + scores(i));
        return sum / static_cast<double>(scores.size());
    };
    double lo = -1.0, hi = 1.0;
    while (expected(lo) > proportion) lo *= 2.0;
    while (expected(hi) < proportion) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double value = expected(mid);
        if (std::abs(value - proportion) < 1e-10 || hi - lo < 1e-14) return mid;
        (value < proportion ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Vector missingness_scores(const Matrix& continuous, const std::vector<ColumnRole>& roles) {
    Vector sum = Vector::Zero(continuous.rows());
    Index count = 0;
    for (Index j = 0; j < continuous.cols(); ++j) {
        if (roles[static_cast<std::size_t>(j)] != ColumnRole::mar_predictor) continue;
        const Vector col = continuous.col(j);
        const double mean = col.mean();
        const double sd = std::sqrt((col.array() - mean).square().sum() / static_cast<double>(col.size() - 1));
        if (sd > 0.0) sum += (col.array() - mean).matrix() / sd;
        ++count;
    }
    if (count == 0) throw InputError("amputation needs at least one mar-predictor column");
    const double mean = sum.mean();
    const double sd = std::sqrt((sum.array() - mean).square().sum() / static_cast<double>(sum.size() - 1));
    if (!(sd > 0.0)) throw InputError("mar predictors are constant");
    return ((sum.array() - mean) / sd).matrix();
}

Amputation ampute(const Matrix& values, const Matrix& continuous, const std::vector<ColumnRole>& roles,
                  double miss_prop, Rng& rng) {
    if (values.rows() != continuous.rows() || values.cols() != continuous.cols())
        throw InputError("continuous copy must match the data shape");
    const Vector scores = missingness_scores(continuous, roles);
    const double b0 = calibrate_intercept(scores, miss_prop);
    BoolMatrix mask = BoolMatrix::Constant(values.rows(), values.cols(), true);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index j = 0; j < values.cols(); ++j) {
        if (roles[static_cast<std::size_t>(j)] != ColumnRole::analysis_target) continue;
        for (Index i = 0; i < values.rows(); ++i)
            if (unif(rng) < logistic(b0 + scores(i))) mask(i, j) = false;
    }
    std::vector<std::string> names;
    for (Index j = 0; j < values.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
    return Amputation{IncompleteData(values, std::move(mask), std::move(names), roles), scores, b0};
}

double roc_auc(const Vector& score, const Vector& label) {
    const Index n = score.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return score(a) < score(b); });
    // Mann-Whitney with midranks.
    double rank_sum = 0.0, positives = 0.0;
    for (Index k = 0; k < n;) {
        Index end = k;
        while (end + 1 < n && score(order[static_cast<std::size_t>(end + 1)]) == score(order[static_cast<std::size_t>(k)])) ++end;
        const double midrank = 0.5 * static_cast<double>(k + end) + 1.0;
        for (Index t = k; t <= end; ++t)
            if (label(order[static_cast<std::size_t>(t)]) > 0.5) {
                rank_sum += midrank;
                positives += 1.0;
            }
        k = end + 1;
    }
    const double negatives = static_cast<double>(n) - positives;
    if (positives == 0.0 || negatives == 0.0) throw InputError("AUC needs both classes");
    return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

ResponseModelFit fit_response_model(const Vector& indicator, const Matrix& predictors) {
    const Index n = indicator.size();
    Matrix design(n, predictors.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(predictors.cols()) = predictors;
    Vector beta = Vector::Zero(design.cols());
    const double rate = indicator.mean();
    if (!(rate > 0.0 && rate < 1.0)) throw InputError("response model needs both outcomes");
    beta(0) = std::log(rate / (1.0 - rate));
    auto log_lik = [&](const Vector& b) {
        const Vector eta = design * b;
        double ll = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double pr = std::clamp(logistic(eta(i)), 1e-300, 1.0 - 1e-16);
            ll += indicator(i) > 0.5 ? std::log(pr) : std::log1p(-pr);
        }
        return ll;
    };
    // Newton-Raphson
    for (int it = 0; it < 100; ++it) {
        const Vector eta = design * beta;
        Vector pr(n), w(n);
        for (Index i = 0; i < n; ++i) {
            pr(i) = logistic(eta(i));
            w(i) = pr(i) * (1.0 - pr(i));
        }
        const Vector grad = design.transpose() * (indicator - pr);
        const Matrix hess = design.transpose() * w.asDiagonal() * design;
        const Vector step = hess.ldlt().solve(grad);
        beta += step;
        if (step.cwiseAbs().maxCoeff() < 1e-10) break;
    }
    const double ll_null = n * (rate * std::log(rate) + (1.0 - rate) * std::log(1.0 - rate));
    ResponseModelFit out;
    out.coefficients = beta;
    out.mcfadden_r2 = 1.0 - log_lik(beta) / ll_null;
    out.auc = roc_auc(design * beta, indicator);
    return out;
}

double true_value(std::span<const double> full_estimates) {
    if (full_estimates.empty()) throw InputError("true value needs at least one replication");
    return std::accumulate(full_estimates.begin(), full_estimates.end(), 0.0) /
           static_cast<double>(full_estimates.size());
}

double compute_prb(std::span<const double> estimates, std::span<const double> full_estimates) {
    if (estimates.empty()) throw InputError("PRB needs at least one replication");
    const double truth = true_value(full_estimates);
    if (truth == 0.0) throw InputError("relative bias undefined for a true value of 0");
    const double mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / static_cast<double>(estimates.size());
    return std::abs((mean - truth) / truth) * 100.0;
}

double compute_ciw(std::span<const double> lower, std::span<const double> upper) {
    if (lower.size() != upper.size() || lower.empty()) throw InputError("CIW needs matching non-empty bounds");
    double sum = 0.0;
    for (std::size_t s = 0; s < lower.size(); ++s) sum += upper[s] - lower[s];
    return sum / static_cast<double>(lower.size());
}

double compute_cic(std::span<const double> lower, std::span<const double> upper, double truth) {
    if (lower.size() != upper.size() || lower.empty()) throw InputError("CIC needs matching non-empty bounds");
    std::size_t hits = 0;
    for (std::size_t s = 0; s < lower.size(); ++s)
        if (lower[s] <= truth && truth <= upper[s]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(lower.size());
}

}  // namespace mipcr
