#ifndef MIPCR_ENGINE_HPP
#define MIPCR_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mipcr/data.hpp"
#include "mipcr/imputers.hpp"

namespace mipcr {

/// How the predictors of each univariate imputation model are formed.
///  - pcr_vbv: components of all other columns, re-extracted at every visit.
///  - pcr_all: components of all columns, extracted once from a single
///    imputation pre-pass; one main iteration.
///  - pcr_aux: raw analysis columns plus components of the mar/auxiliary
///    block, extracted once.
///  - quickpred: raw columns passing a correlation screen.
///  - oracle: raw analysis columns plus the mar predictors.
enum class Strategy { pcr_vbv, pcr_all, pcr_aux, quickpred, oracle };

Strategy parse_strategy(const std::string& text);
std::string to_string(Strategy strategy);
bool uses_components(Strategy strategy);

/// A fixed number of components, or the largest count the block allows.
class ComponentCount {
public:
    static ComponentCount fixed(Index q);
    static ComponentCount max() { return ComponentCount(); }
    /// Accepts a positive integer or "max".
    static ComponentCount parse(const std::string& text);

    bool is_max() const { return !value_; }
    Index value() const;
    std::string to_string() const;

    bool operator==(const ComponentCount&) const = default;

private:
    std::optional<Index> value_;
};

struct ImputationSpec {
    Strategy strategy = Strategy::pcr_vbv;
    ComponentCount q = ComponentCount::max();
    ImputerKind imputer;
    int chains = 5;
    int iterations = 20;
    double corr_threshold = 0.1;
    double prepass_threshold = 0.3;
    int prepass_iterations = 20;
    std::uint64_t seed = 0;
    double ridge = kDefaultRidge;
    /// Columns the chained loop visits; empty means every incomplete column.
    /// Incomplete columns left out keep their initial random fill.
    std::vector<Index> visit_columns;

    void validate() const;
    /// pcr_all needs a single sweep because its predictors never change.
    int main_iterations() const { return strategy == Strategy::pcr_all ? 1 : iterations; }
};

/// Mean and SD of the imputed cells of one column after one visit.
struct TraceEntry {
    int chain = 0;      // 1-based
    int iteration = 0;  // 1-based
    Index column = 0;
    double mean = 0.0;
    double sd = 0.0;
};

/// Emitted whenever components are extracted. Components shared by every
/// chain report chain 0 and iteration 0.
struct PcaEvent {
    int chain = 0;
    int iteration = 0;
    Index column = -1;
    Index components = 0;
};

struct EngineHooks {
    std::function<void(const TraceEntry&)> on_trace;
    std::function<void(const PcaEvent&)> on_pca;
    /// Defaults to stderr when unset.
    std::function<void(const std::string&)> on_warning;

    void warn(const std::string& message) const;
};

struct MultiplyImputedSet {
    std::vector<Matrix> completions;
    std::vector<TraceEntry> trace;
    ImputationSpec spec;
    std::vector<double> chain_seconds;
    double setup_seconds = 0.0;

    int m() const { return static_cast<int>(completions.size()); }
};

/// Fills each missing cell with a uniform draw (with replacement) from the
/// observed values of its column.
Matrix initialize_fill(const IncompleteData& data, Rng& rng);

/// Per-column predictor lists from the correlation screen: column k predicts
/// j when |r(x_j, x_k)| >= threshold or |r(1{x_j observed}, x_k)| >= threshold,
/// both on pairwise-complete rows of the original data. Undefined
/// correlations count as 0.
std::vector<std::vector<Index>> quickpred_predictors(const IncompleteData& data, double threshold);

/// Indices in `columns` whose values in `m` are not constant.
std::vector<Index> nonconstant_columns(const Matrix& m, const std::vector<Index>& columns);

/// Where in a run a predictor matrix is being built (for hooks).
struct Visit {
    int chain = 0;
    int iteration = 0;
};

/// Everything about predictor construction that is fixed for a run: the
/// component scores for pcr_all/pcr_aux and the screened sets for
/// quickpred. Shared read-only by all chains.
class PredictorPlan {
public:
    /// `completed` is the pre-pass completion; it is only read for pcr_all
    /// and pcr_aux and may be null when the relevant block is complete.
    static PredictorPlan prepare(const ImputationSpec& spec, const IncompleteData& data, const Matrix* completed,
                                 const EngineHooks& hooks = {});

    Strategy strategy() const { return strategy_; }
    /// Fixed component scores (pcr_all/pcr_aux), empty otherwise.
    const Matrix& fixed_scores() const { return fixed_scores_; }

    /// Predictor matrix (all rows) for imputing `target` given the current
    /// completion. Observed-case budget: predictors + intercept must stay
    /// below the number of observed cells of the target.
    Matrix build(const Matrix& current, Index target, Visit visit = {}, const EngineHooks& hooks = {}) const;

    /// Raw columns used for `target` (quickpred, oracle, and the raw part
    /// of pcr_aux).
    std::vector<Index> raw_columns(const Matrix& current, Index target) const;

private:
    Strategy strategy_ = Strategy::pcr_vbv;
    ComponentCount q_;
    const IncompleteData* data_ = nullptr;
    std::vector<std::vector<Index>> screened_;
    std::vector<Index> analysis_;
    std::vector<Index> mar_;
    Matrix fixed_scores_;

    Index budget(Index target, Index raw_count) const;
};

/// Convenience wrapper around PredictorPlan::build.
Matrix build_predictors(const PredictorPlan& plan, const Matrix& current, Index target);

struct ChainResult {
    Matrix completion;
    std::vector<TraceEntry> trace;
};

/// One chain: random initial fill, then sweeps over the incomplete columns
/// in ascending order, each imputed from the most recent values.
ChainResult run_chain(const ImputationSpec& spec, const IncompleteData& data, const PredictorPlan& plan, Rng& rng,
                      int chain = 1, const EngineHooks& hooks = {});

/// Standalone chain: prepares its own plan (running the pre-pass from `rng`
/// when the strategy needs one).
ChainResult run_chain(const ImputationSpec& spec, const IncompleteData& data, Rng& rng,
                      const EngineHooks& hooks = {});

/// Single quickpred chain used to complete the data before extracting
/// components for pcr_all/pcr_aux. Its output is never used for inference.
Matrix prepass_single_impute(const IncompleteData& data, double threshold, int iterations, Rng& rng,
                             const ImputerKind& imputer = {}, double ridge = kDefaultRidge,
                             const EngineHooks& hooks = {});

/// Runs the pre-pass when needed, then `spec.chains` independent chains.
/// Chain c draws from derive_seed(seed, c) and the pre-pass from
/// derive_seed(seed, 0); results do not depend on `workers`.
MultiplyImputedSet run_impute(const ImputationSpec& spec, const IncompleteData& data, const EngineHooks& hooks = {},
                              int workers = 1);

}  // namespace mipcr

#endif
