#ifndef MIPCR_PCA_HPP
#define MIPCR_PCA_HPP

#include <vector>

#include "mipcr/types.hpp"

namespace mipcr {

struct Standardized {
    Matrix values;
    Vector centers;
    Vector scales;  // sample SD, or 1 for constant columns
};

/// Centers each column and divides by its sample standard deviation.
/// Constant columns keep scale 1 and become all-zero.
Standardized standardize(const Matrix& m);

/// Pearson correlation matrix of a complete matrix. Entries involving a
/// constant column are 0 off the diagonal.
Matrix correlation_matrix(const Matrix& m);

/// Principal components of the Pearson correlation structure.
struct PcaResult {
    Matrix scores;       // n x q, standardized data times weights
    Matrix weights;      // p x q, orthonormal columns
    Vector eigenvalues;  // q leading eigenvalues, nonincreasing
    Vector spectrum;     // all p eigenvalues, nonincreasing
    Vector centers;
    Vector scales;
    Index q = 0;
};

/// Extracts the first q components. Each weight column is oriented so that
/// its largest-magnitude entry is positive (lowest index wins ties).
PcaResult pca(const Matrix& m, Index q);

/// Eigenvalues of the correlation matrix, nonincreasing.
Vector correlation_spectrum(const Matrix& m);

/// Upper bound on the number of components for an n x p block.
Index max_components(Index n_rows, Index n_cols);

/// Flips eigenvector signs in place per the orientation rule used by pca().
void orient_columns(Matrix& vectors);

enum class RetentionRule { kaiser, parallel_analysis, optimal_coordinates, acceleration_factor };

struct EnumerationRule {
    RetentionRule rule = RetentionRule::kaiser;
    int replicates = 100;    // parallel analysis only
    double quantile = 0.95;  // parallel analysis only

    void validate() const;
};

RetentionRule parse_retention_rule(const std::string& text);
std::string to_string(RetentionRule rule);

/// Per-position quantile of eigenvalues from `replicates` standard-normal
/// n x p datasets.
Vector parallel_reference(Index n, Index p, int replicates, double quantile, Rng& rng);

/// Applies a retention rule to a given spectrum. `reference` is only read
/// for parallel analysis and must have the same length as `spectrum`.
Index retained_components(const Vector& spectrum, RetentionRule rule, const Vector& reference = {});

/// Number of components retained by `rule` on a complete matrix.
Index enumerate_components(const Matrix& m, const EnumerationRule& rule, Rng& rng);

}  // namespace mipcr

#endif
