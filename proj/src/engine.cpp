#include "mipcr/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <mutex>
#include <thread>

#include "mipcr/pca.hpp"

namespace mipcr {

Strategy parse_strategy(const std::string& text) {
    if (text == "pcr-vbv" || text == "vbv") return Strategy::pcr_vbv;
    if (text == "pcr-all" || text == "all") return Strategy::pcr_all;
    if (text == "pcr-aux" || text == "aux") return Strategy::pcr_aux;
    if (text == "quickpred" || text == "qp") return Strategy::quickpred;
    if (text == "oracle" || text == "or") return Strategy::oracle;
    throw InputError("unknown imputation method '" + text + "'");
}

std::string to_string(Strategy strategy) {
    switch (strategy) {
    case Strategy::pcr_vbv: return "pcr-vbv";
    case Strategy::pcr_all: return "pcr-all";
    case Strategy::pcr_aux: return "pcr-aux";
    case Strategy::quickpred: return "quickpred";
    case Strategy::oracle: return "oracle";
    }
    return "unknown";
}

bool uses_components(Strategy strategy) {
    return strategy == Strategy::pcr_vbv || strategy == Strategy::pcr_all || strategy == Strategy::pcr_aux;
}

ComponentCount ComponentCount::fixed(Index q) {
    if (q < 1) throw InputError("component count must be at least 1");
    ComponentCount c;
    c.value_ = q;
    return c;
}

ComponentCount ComponentCount::parse(const std::string& text) {
    if (text == "max") return max();
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || used == 0) throw InputError("component count must be a positive integer or 'max'");
    return fixed(static_cast<Index>(v));
}

Index ComponentCount::value() const {
    if (!value_) throw InputError("component count 'max' has no fixed value");
    return *value_;
}

std::string ComponentCount::to_string() const { return value_ ? std::to_string(*value_) : "max"; }

void ImputationSpec::validate() const {
    imputer.validate();
    if (chains < 1) throw InputError("number of imputations must be at least 1");
    if (iterations < 1) throw InputError("number of iterations must be at least 1");
    if (prepass_iterations < 1) throw InputError("pre-pass iterations must be at least 1");
    if (!(corr_threshold >= 0.0 && corr_threshold <= 1.0)) throw InputError("correlation threshold must lie in [0, 1]");
    if (!(prepass_threshold >= 0.0 && prepass_threshold <= 1.0))
        throw InputError("pre-pass threshold must lie in [0, 1]");
    if (ridge < 0.0) throw InputError("ridge must be nonnegative");
}

void EngineHooks::warn(const std::string& message) const {
    if (on_warning)
        on_warning(message);
    else
        std::cerr << "warning: " << message << '\n';
}

Matrix initialize_fill(const IncompleteData& data, Rng& rng) {
    Matrix out = data.values();
    for (Index j = 0; j < data.cols(); ++j) {
        std::vector<double> pool;
        for (Index i = 0; i < data.rows(); ++i)
            if (data.observed(i, j)) pool.push_back(data.values()(i, j));
        if (static_cast<Index>(pool.size()) == data.rows()) continue;
        if (pool.empty()) throw InputError("column '" + data.names()[static_cast<std::size_t>(j)] + "' has no observed values");
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        for (Index i = 0; i < data.rows(); ++i)
            if (!data.observed(i, j)) out(i, j) = pool[pick(rng)];
    }
    return out;
}

namespace {

// Pearson correlation over rows where `use` holds; 0 when undefined.
double masked_correlation(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b,
                          const Eigen::Ref<const Eigen::Matrix<bool, Eigen::Dynamic, 1>>& use) {
    double n = 0, sa = 0, sb = 0;
    for (Index i = 0; i < a.size(); ++i) {
        if (!use(i)) continue;
        n += 1;
        sa += a(i);
        sb += b(i);
    }
    if (n < 2) return 0.0;
    const double ma = sa / n, mb = sb / n;
    double saa = 0, sbb = 0, sab = 0;
    for (Index i = 0; i < a.size(); ++i) {
        if (!use(i)) continue;
        const double da = a(i) - ma, db = b(i) - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

bool column_is_constant(const Eigen::Ref<const Vector>& v) {
    if (v.size() == 0) return true;
    const double first = v(0);
    return (v.array() == first).all();
}

std::vector<Index> without(std::vector<Index> cols, Index excluded) {
    cols.erase(std::remove(cols.begin(), cols.end(), excluded), cols.end());
    return cols;
}

Matrix extract_columns(const Matrix& m, const std::vector<Index>& cols) {
    Matrix out(m.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = m.col(cols[k]);
    return out;
}

std::vector<Index> auxiliary_block(const IncompleteData& data) {
    std::vector<Index> out;
    for (Index j = 0; j < data.cols(); ++j)
        if (data.roles()[static_cast<std::size_t>(j)] != ColumnRole::analysis_target) out.push_back(j);
    return out;
}

bool block_complete(const IncompleteData& data, const std::vector<Index>& cols) {
    for (Index c : cols)
        if (data.observed_count(c) < data.rows()) return false;
    return true;
}

bool needs_prepass(const ImputationSpec& spec, const IncompleteData& data) {
    if (spec.strategy == Strategy::pcr_all) return data.missing_count() > 0;
    if (spec.strategy == Strategy::pcr_aux) return !block_complete(data, auxiliary_block(data));
    return false;
}

std::vector<Index> visited_columns(const ImputationSpec& spec, const IncompleteData& data) {
    std::vector<Index> incomplete = data.incomplete_columns();
    if (spec.visit_columns.empty()) return incomplete;
    std::vector<Index> out;
    for (Index c : incomplete)
        if (std::find(spec.visit_columns.begin(), spec.visit_columns.end(), c) != spec.visit_columns.end())
            out.push_back(c);
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<std::vector<Index>> quickpred_predictors(const IncompleteData& data, double threshold) {
    const Index p = data.cols();
    const BoolMatrix& mask = data.mask();
    Matrix indicators = mask.cast<double>();
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) {
        const bool has_missing = data.observed_count(j) < data.rows();
        for (Index k = 0; k < p; ++k) {
            if (k == j) continue;
            Eigen::Matrix<bool, Eigen::Dynamic, 1> both = mask.col(j).array() && mask.col(k).array();
            double r = std::abs(masked_correlation(data.values().col(j), data.values().col(k), both));
            if (has_missing) {
                const double ri = std::abs(masked_correlation(indicators.col(j), data.values().col(k), mask.col(k)));
                r = std::max(r, ri);
            }
            if (r >= threshold) out[static_cast<std::size_t>(j)].push_back(k);
        }
    }
    return out;
}

std::vector<Index> nonconstant_columns(const Matrix& m, const std::vector<Index>& columns) {
    std::vector<Index> out;
    out.reserve(columns.size());
    for (Index c : columns)
        if (!column_is_constant(m.col(c))) out.push_back(c);
    return out;
}

PredictorPlan PredictorPlan::prepare(const ImputationSpec& spec, const IncompleteData& data, const Matrix* completed,
                                     const EngineHooks& hooks) {
    PredictorPlan plan;
    plan.strategy_ = spec.strategy;
    plan.q_ = spec.q;
    plan.data_ = &data;
    plan.analysis_ = data.columns_with_role(ColumnRole::analysis_target);
    plan.mar_ = data.columns_with_role(ColumnRole::mar_predictor);

    switch (spec.strategy) {
    case Strategy::quickpred:
        plan.screened_ = quickpred_predictors(data, spec.corr_threshold);
        break;
    case Strategy::pcr_all:
    case Strategy::pcr_aux: {
        std::vector<Index> block = spec.strategy == Strategy::pcr_all ? ColumnSubset::all(data.cols()).indices()
                                                                      : auxiliary_block(data);
        if (spec.strategy == Strategy::pcr_aux && plan.analysis_.empty())
            throw InputError("pcr-aux needs at least one analysis column");
        const Matrix* source = completed;
        if (!source) {
            if (!block_complete(data, block))
                throw InputError(to_string(spec.strategy) + " needs a pre-pass completion of its component block");
            source = &data.values();
        }
        const std::vector<Index> kept = nonconstant_columns(*source, block);
        if (kept.size() < block.size())
            hooks.warn("dropped " + std::to_string(block.size() - kept.size()) +
                       " constant column(s) before extracting components");
        const Matrix values = extract_columns(*source, kept);
        const Index limit = max_components(values.rows(), values.cols());
        Index q = limit;
        if (!spec.q.is_max()) {
            q = spec.q.value();
            if (q > limit)
                throw InputError("requested " + std::to_string(q) + " components but at most " +
                                 std::to_string(limit) + " are available");
        }
        if (kept.empty()) {
            plan.fixed_scores_.resize(data.rows(), 0);
        } else {
            plan.fixed_scores_ = pca(values, q).scores;
            if (hooks.on_pca) hooks.on_pca(PcaEvent{0, 0, -1, q});
        }
        break;
    }
    case Strategy::pcr_vbv:
    case Strategy::oracle:
        break;
    }
    return plan;
}

Index PredictorPlan::budget(Index target, Index raw_count) const {
    return std::max<Index>(0, data_->observed_count(target) - 2 - raw_count);
}

std::vector<Index> PredictorPlan::raw_columns(const Matrix& current, Index target) const {
    switch (strategy_) {
    case Strategy::quickpred:
        return nonconstant_columns(current, screened_[static_cast<std::size_t>(target)]);
    case Strategy::pcr_aux:
        return nonconstant_columns(current, without(analysis_, target));
    case Strategy::oracle: {
        std::vector<Index> cols = without(analysis_, target);
        for (Index c : mar_)
            if (c != target) cols.push_back(c);
        std::sort(cols.begin(), cols.end());
        return nonconstant_columns(current, cols);
    }
    default:
        return {};
    }
}

Matrix PredictorPlan::build(const Matrix& current, Index target, Visit visit, const EngineHooks& hooks) const {
    if (!data_) throw InputError("predictor plan is not prepared");
    switch (strategy_) {
    case Strategy::pcr_vbv: {
        const std::vector<Index> others = ColumnSubset::all_except(current.cols(), target).indices();
        const std::vector<Index> kept = nonconstant_columns(current, others);
        if (kept.size() < others.size())
            hooks.warn("dropped " + std::to_string(others.size() - kept.size()) +
                       " constant column(s) before extracting components");
        if (kept.empty()) return Matrix(current.rows(), 0);
        const Matrix block = extract_columns(current, kept);
        const Index limit = max_components(block.rows(), block.cols());
        Index q = 0;
        if (q_.is_max()) {
            q = std::min(limit, budget(target, 0));
        } else {
            q = q_.value();
            if (q > limit)
                throw InputError("requested " + std::to_string(q) + " components but at most " +
                                 std::to_string(limit) + " are available");
        }
        if (hooks.on_pca) hooks.on_pca(PcaEvent{visit.chain, visit.iteration, target, q});
        return pca(block, q).scores;
    }
    case Strategy::pcr_all: {
        const Index take = q_.is_max() ? std::min(fixed_scores_.cols(), budget(target, 0)) : fixed_scores_.cols();
        return fixed_scores_.leftCols(take);
    }
    case Strategy::pcr_aux: {
        const std::vector<Index> raw = raw_columns(current, target);
        const auto raw_count = static_cast<Index>(raw.size());
        const Index take = q_.is_max() ? std::min(fixed_scores_.cols(), budget(target, raw_count))
                                       : fixed_scores_.cols();
        Matrix out(current.rows(), raw_count + take);
        out.leftCols(raw_count) = extract_columns(current, raw);
        out.rightCols(take) = fixed_scores_.leftCols(take);
        return out;
    }
    case Strategy::quickpred:
    case Strategy::oracle:
        return extract_columns(current, raw_columns(current, target));
    }
    return {};
}

Matrix build_predictors(const PredictorPlan& plan, const Matrix& current, Index target) {
    return plan.build(current, target);
}

ChainResult run_chain(const ImputationSpec& spec, const IncompleteData& data, const PredictorPlan& plan, Rng& rng,
                      int chain, const EngineHooks& hooks) {
    spec.validate();
    const std::vector<Index> visit = visited_columns(spec, data);
    struct Split {
        std::vector<Index> observed, missing;
        Vector y_obs;
    };
    std::vector<Split> splits;
    for (Index j : visit) {
        Split s;
        for (Index i = 0; i < data.rows(); ++i) (data.observed(i, j) ? s.observed : s.missing).push_back(i);
        if (s.observed.size() < 3)
            throw InputError("column '" + data.names()[static_cast<std::size_t>(j)] +
                             "' needs at least 3 observed values to be imputed");
        s.y_obs.resize(static_cast<Index>(s.observed.size()));
        for (std::size_t k = 0; k < s.observed.size(); ++k) s.y_obs(static_cast<Index>(k)) = data.values()(s.observed[k], j);
        splits.push_back(std::move(s));
    }

    ChainResult result;
    result.completion = initialize_fill(data, rng);
    if (visit.empty()) return result;

    Matrix& current = result.completion;
    const int sweeps = spec.main_iterations();
    for (int it = 1; it <= sweeps; ++it) {
        for (std::size_t v = 0; v < visit.size(); ++v) {
            const Index j = visit[v];
            const Split& s = splits[v];
            const Matrix predictors = plan.build(current, j, {chain, it}, hooks);
            const Matrix x_obs = select_rows(predictors, s.observed);
            const Matrix x_mis = select_rows(predictors, s.missing);
            Vector imputed;
            try {
                imputed = impute_column(spec.imputer, s.y_obs, x_obs, x_mis, rng, spec.ridge);
            } catch (const NumericalError& e) {
                throw NumericalError(std::string(e.what()) + " (chain " + std::to_string(chain) + ", iteration " +
                                     std::to_string(it) + ", column '" + data.names()[static_cast<std::size_t>(j)] +
                                     "')");
            }
            if (!imputed.allFinite())
                throw NumericalError("non-finite imputation in chain " + std::to_string(chain) + ", iteration " +
                                     std::to_string(it) + ", column '" + data.names()[static_cast<std::size_t>(j)] +
                                     "'");
            for (std::size_t k = 0; k < s.missing.size(); ++k) current(s.missing[k], j) = imputed(static_cast<Index>(k));

            TraceEntry entry{chain, it, j, imputed.mean(), 0.0};
            if (imputed.size() > 1)
                entry.sd = std::sqrt((imputed.array() - entry.mean).square().sum() /
                                     static_cast<double>(imputed.size() - 1));
            if (hooks.on_trace) hooks.on_trace(entry);
            result.trace.push_back(entry);
        }
    }
    return result;
}

Matrix prepass_single_impute(const IncompleteData& data, double threshold, int iterations, Rng& rng,
                             const ImputerKind& imputer, double ridge, const EngineHooks& hooks) {
    ImputationSpec spec;
    spec.strategy = Strategy::quickpred;
    spec.corr_threshold = threshold;
    spec.iterations = iterations;
    spec.imputer = imputer;
    spec.ridge = ridge;
    spec.chains = 1;
    spec.validate();
    if (data.missing_count() == 0) return data.values();
    EngineHooks quiet;
    quiet.on_warning = hooks.on_warning;
    const PredictorPlan plan = PredictorPlan::prepare(spec, data, nullptr, quiet);
    return run_chain(spec, data, plan, rng, 0, quiet).completion;
}

ChainResult run_chain(const ImputationSpec& spec, const IncompleteData& data, Rng& rng, const EngineHooks& hooks) {
    spec.validate();
    std::optional<Matrix> completed;
    if (needs_prepass(spec, data))
        completed = prepass_single_impute(data, spec.prepass_threshold, spec.prepass_iterations, rng, spec.imputer,
                                          spec.ridge, hooks);
    const PredictorPlan plan = PredictorPlan::prepare(spec, data, completed ? &*completed : nullptr, hooks);
    return run_chain(spec, data, plan, rng, 1, hooks);
}

MultiplyImputedSet run_impute(const ImputationSpec& spec, const IncompleteData& data, const EngineHooks& hooks,
                              int workers) {
    spec.validate();
    const auto start = std::chrono::steady_clock::now();
    std::optional<Matrix> completed;
    if (needs_prepass(spec, data)) {
        Rng rng(derive_seed(spec.seed, 0));
        completed = prepass_single_impute(data, spec.prepass_threshold, spec.prepass_iterations, rng, spec.imputer,
                                          spec.ridge, hooks);
    }
    const PredictorPlan plan = PredictorPlan::prepare(spec, data, completed ? &*completed : nullptr, hooks);

    MultiplyImputedSet out;
    out.spec = spec;
    out.setup_seconds = seconds_since(start);
    const auto m = static_cast<std::size_t>(spec.chains);
    std::vector<ChainResult> results(m);
    out.chain_seconds.assign(m, 0.0);

    std::mutex hook_mutex;
    EngineHooks shared = hooks;
    if (workers > 1) {
        if (hooks.on_trace)
            shared.on_trace = [&](const TraceEntry& e) {
                std::lock_guard lock(hook_mutex);
                hooks.on_trace(e);
            };
        if (hooks.on_pca)
            shared.on_pca = [&](const PcaEvent& e) {
                std::lock_guard lock(hook_mutex);
                hooks.on_pca(e);
            };
        shared.on_warning = [&](const std::string& msg) {
            std::lock_guard lock(hook_mutex);
            hooks.warn(msg);
        };
    }

    auto run_one = [&](std::size_t c) {
        const auto chain_start = std::chrono::steady_clock::now();
        Rng rng(derive_seed(spec.seed, c + 1));
        results[c] = run_chain(spec, data, plan, rng, static_cast<int>(c + 1), shared);
        out.chain_seconds[c] = seconds_since(chain_start);
    };

    if (workers <= 1 || m == 1) {
        for (std::size_t c = 0; c < m; ++c) run_one(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(m);
        std::vector<std::thread> pool;
        const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(workers), m);
        for (std::size_t t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < m; c = next++) {
                    try {
                        run_one(c);
                    } catch (...) {
                        errors[c] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    for (auto& r : results) {
        out.completions.push_back(std::move(r.completion));
        out.trace.insert(out.trace.end(), r.trace.begin(), r.trace.end());
    }
    return out;
}

}  // namespace mipcr
