#ifndef MIPCR_POOLING_HPP
#define MIPCR_POOLING_HPP

#include <span>
#include <string>
#include <vector>

#include "mipcr/types.hpp"

namespace mipcr {

struct MultiplyImputedSet;

enum class ParameterKind { mean, variance, covariance, correlation };

std::string to_string(ParameterKind kind);

struct ParameterId {
    ParameterKind kind = ParameterKind::mean;
    Index first = 0;
    Index second = -1;  // only for covariance/correlation

    static ParameterId mean(Index col) { return {ParameterKind::mean, col, -1}; }
    static ParameterId variance(Index col) { return {ParameterKind::variance, col, -1}; }
    static ParameterId covariance(Index a, Index b);
    static ParameterId correlation(Index a, Index b);

    bool binary() const { return kind == ParameterKind::covariance || kind == ParameterKind::correlation; }
    /// Estimand count subtracted from n for the complete-data df.
    int estimand_inputs() const { return binary() ? 2 : 1; }
    void validate(Index n_cols) const;
    /// e.g. "cor(x1,x2)".
    std::string label(const std::vector<std::string>& names) const;

    bool operator==(const ParameterId&) const = default;
};

/// Parses "mean:x1", "var:x1", "cov:x1:x2", "cor:x1:x2" against a header.
ParameterId parse_parameter(const std::string& text, const std::vector<std::string>& names);

/// Point estimate and its sampling variance. Correlations are reported on
/// the Fisher z scale.
struct Estimate {
    double value = 0.0;
    double variance = 0.0;
};

Estimate estimate_parameter(const Matrix& completion, const ParameterId& pid);

/// Plain sample correlation of two columns (no transformation).
double sample_correlation(const Matrix& m, Index a, Index b);

/// Value of the estimand on a complete dataset, on the reporting scale
/// (correlations as r, not z).
double point_estimate(const Matrix& complete, const ParameterId& pid);

struct PooledEstimate {
    double estimate = 0.0;    // reporting scale
    double within_var = 0.0;  // pooling scale from here on
    double between_var = 0.0;
    double total_var = 0.0;
    double df = 0.0;
    double ci_lower = 0.0;  // reporting scale
    double ci_upper = 0.0;
    int m = 0;
};

/// Barnard-Rubin degrees of freedom. Returns `complete_df` when B == 0.
double barnard_rubin_df(double within, double between, int m, double complete_df);

/// Rubin's rules with a 95% t interval. For correlations the inputs are on
/// the z scale and the estimate and bounds are returned back-transformed.
PooledEstimate rubin_pool(std::span<const Estimate> estimates, ParameterKind kind, double complete_df);

/// estimate_parameter on every completion followed by rubin_pool.
std::vector<PooledEstimate> analyze_set(const MultiplyImputedSet& set, const std::vector<ParameterId>& pids);
std::vector<PooledEstimate> analyze_completions(std::span<const Matrix> completions,
                                                const std::vector<ParameterId>& pids);

}  // namespace mipcr

#endif
