#include "mipcr/pca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace mipcr {

namespace {

void require_finite(const Matrix& m) {
    if (!m.allFinite()) throw InputError("matrix contains missing or non-finite values");
}

bool is_constant(double sd, double mean) {
    return !(sd > 1e-14 * (1.0 + std::abs(mean)));
}

// Eigen-decomposition of a symmetric matrix with eigenpairs in
// nonincreasing order and oriented eigenvectors.
std::pair<Vector, Matrix> sorted_eigen(const Matrix& sym, bool with_vectors) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, with_vectors ? Eigen::ComputeEigenvectors
                                                                   : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
    const Vector values = solver.eigenvalues().reverse();
    Vector clamped = values.cwiseMax(0.0);
    Matrix vectors;
    if (with_vectors) {
        vectors = solver.eigenvectors().rowwise().reverse();
        orient_columns(vectors);
    }
    return {std::move(clamped), std::move(vectors)};
}

}  // namespace

Standardized standardize(const Matrix& m) {
    const Index n = m.rows();
    if (n < 2) throw InputError("standardization needs at least 2 rows");
    require_finite(m);
    Standardized out;
    out.values.resize(n, m.cols());
    out.centers.resize(m.cols());
    out.scales.resize(m.cols());
    for (Index j = 0; j < m.cols(); ++j) {
        const double mean = m.col(j).mean();
        Vector centered = m.col(j).array() - mean;
        const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(n - 1));
        out.centers(j) = mean;
        if (is_constant(sd, mean)) {
            out.scales(j) = 1.0;
            out.values.col(j).setZero();
        } else {
            out.scales(j) = sd;
            out.values.col(j) = centered / sd;
        }
    }
    return out;
}

namespace {

Matrix correlation_of_standardized(const Matrix& z) {
    Matrix r = Matrix::Zero(z.cols(), z.cols());
    r.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose(), 1.0 / static_cast<double>(z.rows() - 1));
    Matrix full = r.selfadjointView<Eigen::Lower>();
    for (Index j = 0; j < z.cols(); ++j) full(j, j) = z.col(j).isZero(0.0) ? 0.0 : 1.0;
    return full;
}

}  // namespace

Matrix correlation_matrix(const Matrix& m) { return correlation_of_standardized(standardize(m).values); }

void orient_columns(Matrix& vectors) {
    for (Index k = 0; k < vectors.cols(); ++k) {
        Index best = 0;
        double best_abs = -1.0;
        for (Index i = 0; i < vectors.rows(); ++i) {
            const double a = std::abs(vectors(i, k));
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (vectors.rows() > 0 && vectors(best, k) < 0.0) vectors.col(k) *= -1.0;
    }
}

PcaResult pca(const Matrix& m, Index q) {
    if (q < 0 || q > max_components(m.rows(), m.cols()))
        throw InputError("component count " + std::to_string(q) + " out of range for a " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + " matrix");
    Standardized s = standardize(m);
    auto [values, vectors] = sorted_eigen(correlation_of_standardized(s.values), true);

    PcaResult out;
    out.q = q;
    out.weights = vectors.leftCols(q);
    out.eigenvalues = values.head(q);
    out.spectrum = std::move(values);
    out.scores = s.values * out.weights;
    out.centers = std::move(s.centers);
    out.scales = std::move(s.scales);
    return out;
}

Vector correlation_spectrum(const Matrix& m) {
    return sorted_eigen(correlation_matrix(m), false).first;
}

Index max_components(Index n_rows, Index n_cols) { return std::min(n_rows, n_cols); }

void EnumerationRule::validate() const {
    if (replicates < 1) throw InputError("parallel analysis needs at least one replicate");
    if (!(quantile > 0.0 && quantile < 1.0)) throw InputError("parallel analysis quantile must lie in (0, 1)");
}

RetentionRule parse_retention_rule(const std::string& text) {
    if (text == "kaiser" || text == "kc") return RetentionRule::kaiser;
    if (text == "parallel-analysis" || text == "pa") return RetentionRule::parallel_analysis;
    if (text == "optimal-coordinates" || text == "oc") return RetentionRule::optimal_coordinates;
    if (text == "acceleration-factor" || text == "af") return RetentionRule::acceleration_factor;
    throw InputError("unknown retention rule '" + text + "'");
}

std::string to_string(RetentionRule rule) {
    switch (rule) {
    case RetentionRule::kaiser: return "kaiser";
    case RetentionRule::parallel_analysis: return "parallel-analysis";
    case RetentionRule::optimal_coordinates: return "optimal-coordinates";
    case RetentionRule::acceleration_factor: return "acceleration-factor";
    }
    return "unknown";
}

Vector parallel_reference(Index n, Index p, int replicates, double quantile, Rng& rng) {
    if (n < 2 || p < 1) throw InputError("parallel analysis needs at least 2 rows and 1 column");
    std::normal_distribution<double> normal;
    Matrix spectra(p, replicates);
    Matrix noise(n, p);
    for (int r = 0; r < replicates; ++r) {
        for (Index j = 0; j < p; ++j)
            for (Index i = 0; i < n; ++i) noise(i, j) = normal(rng);
        spectra.col(r) = correlation_spectrum(noise);
    }
    // Type-7 sample quantile per position.
    Vector out(p);
    std::vector<double> row(static_cast<std::size_t>(replicates));
    for (Index k = 0; k < p; ++k) {
        for (int r = 0; r < replicates; ++r) row[static_cast<std::size_t>(r)] = spectra(k, r);
        std::sort(row.begin(), row.end());
        const double h = quantile * static_cast<double>(replicates - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, row.size() - 1);
        out(k) = row[lo] + (h - static_cast<double>(lo)) * (row[hi] - row[lo]);
    }
    return out;
}

Index retained_components(const Vector& spectrum, RetentionRule rule, const Vector& reference) {
    const Index p = spectrum.size();
    switch (rule) {
    case RetentionRule::kaiser:
        return (spectrum.array() > 1.0).count();
    case RetentionRule::parallel_analysis: {
        if (reference.size() != p) throw InputError("parallel analysis reference has the wrong length");
        Index k = 0;
        while (k < p && spectrum(k) > reference(k)) ++k;
        return k;
    }
    case RetentionRule::optimal_coordinates: {
        if (p < 3) throw InputError("optimal coordinates needs at least 3 eigenvalues");
        // Component i (0-based) is compared with the value at i of the line
        // through (i+1, lambda[i+1]) and (p-1, lambda[p-1]). Only components
        // above the reference floor count; the default floor is 1.
        Index k = 0;
        while (k <= p - 3) {
            const double next = spectrum(k + 1);
            const double slope = (spectrum(p - 1) - next) / static_cast<double>(p - 1 - (k + 1));
            const double predicted = next - slope;
            const double floor = reference.size() == p ? reference(k) : 1.0;
            if (!(spectrum(k) > predicted && spectrum(k) > floor)) break;
            ++k;
        }
        return k;
    }
    case RetentionRule::acceleration_factor: {
        if (p < 3) throw InputError("acceleration factor needs at least 3 eigenvalues");
        Index best = 1;
        double best_value = -std::numeric_limits<double>::infinity();
        for (Index i = 1; i + 1 < p; ++i) {
            const double accel = spectrum(i - 1) - 2.0 * spectrum(i) + spectrum(i + 1);
            if (accel > best_value) {
                best_value = accel;
                best = i;
            }
        }
        // `best` is the 0-based position of the elbow, which equals the
        // 1-based elbow index minus one.
        return best;
    }
    }
    return 0;
}

Index enumerate_components(const Matrix& m, const EnumerationRule& rule, Rng& rng) {
    rule.validate();
    if (m.rows() < 2) throw InputError("component enumeration needs at least 2 rows");
    const Vector spectrum = correlation_spectrum(m);
    if (rule.rule == RetentionRule::parallel_analysis) {
        const Vector reference = parallel_reference(m.rows(), m.cols(), rule.replicates, rule.quantile, rng);
        return retained_components(spectrum, rule.rule, reference);
    }
    return retained_components(spectrum, rule.rule);
}

}  // namespace mipcr
