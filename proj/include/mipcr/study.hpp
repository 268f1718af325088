#ifndef MIPCR_STUDY_HPP
#define MIPCR_STUDY_HPP

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mipcr/engine.hpp"
#include "mipcr/pooling.hpp"
#include "mipcr/simulation.hpp"

namespace mipcr {

struct MethodSpec {
    Strategy strategy = Strategy::oracle;
    ComponentCount q = ComponentCount::max();

    /// q is reported as "NA" for methods without components.
    std::string q_label() const;
    std::string label() const;
};

struct StudyConfig {
    std::vector<SimulationCondition> conditions;
    std::vector<MethodSpec> methods;
    int replications = 1;
    std::uint64_t seed = 0;
    int workers = 1;
    /// Template for every imputation run; strategy, q and seed are replaced.
    ImputationSpec imputation;
    /// Parameters to evaluate; empty selects default_parameters().
    std::vector<ParameterId> parameters;
    /// When false runtimes are reported as 0 so output is reproducible byte for byte.
    bool record_timing = true;

    void validate() const;
};

/// Means and variances of every target plus covariances and correlations of
/// every target pair.
std::vector<ParameterId> default_parameters(int targets);

/// One pooled estimate from one replication.
struct EstimateRow {
    std::size_t condition = 0;
    int replication = 0;
    std::size_t method = 0;
    ParameterId parameter;
    double estimate = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double full_estimate = 0.0;
};

struct FailureRow {
    std::size_t condition = 0;
    int replication = 0;
    std::size_t method = 0;
    std::string message;
};

struct MetricRecord {
    std::size_t condition = 0;
    std::size_t method = 0;
    ParameterId parameter;
    double prb = 0.0;
    double cic = 0.0;
    double ciw = 0.0;
    double runtime_seconds = 0.0;
    int replications = 0;
    int failures = 0;
};

struct StudyResult {
    StudyConfig config;
    std::vector<MetricRecord> metrics;
    std::vector<EstimateRow> estimates;  // ordered by condition, replication, method, parameter
    std::vector<FailureRow> failures;
    /// Wall clock per (condition, replication, method), row-major.
    std::vector<double> runtimes;

    double runtime(std::size_t condition, int replication, std::size_t method) const;
};

/// Metrics over a subset of estimate rows sharing condition/method/parameter.
MetricRecord summarize(std::span<const EstimateRow> rows);

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// Generate, coarsen, ampute, impute with every method and pool, for every
/// condition and replication. Deterministic for a given config regardless of
/// worker count.
StudyResult run_study(const StudyConfig& config, const ProgressCallback& progress = {});

void write_metrics_csv(std::ostream& out, const StudyResult& result);
void write_estimates_csv(std::ostream& out, const StudyResult& result);

}  // namespace mipcr

#endif
