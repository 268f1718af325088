#include "mipcr/study.hpp"

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

namespace mipcr {

std::string MethodSpec::q_label() const { return uses_components(strategy) ? q.to_string() : "NA"; }

std::string MethodSpec::label() const {
    return uses_components(strategy) ? to_string(strategy) + "(" + q.to_string() + ")" : to_string(strategy);
}

void StudyConfig::validate() const {
    if (conditions.empty()) throw InputError("study needs at least one condition");
    if (methods.empty()) throw InputError("study needs at least one method");
    if (replications < 1) throw InputError("study needs at least one replication");
    if (workers < 1) throw InputError("worker count must be at least 1");
    for (const auto& c : conditions) c.validate();
    imputation.validate();
    if (imputation.chains < 2) throw InputError("pooling needs at least 2 imputations");
}

std::vector<ParameterId> default_parameters(int targets) {
    std::vector<ParameterId> out;
    for (Index a = 0; a < targets; ++a) out.push_back(ParameterId::mean(a));
    for (Index a = 0; a < targets; ++a) out.push_back(ParameterId::variance(a));
    for (Index a = 0; a < targets; ++a)
        for (Index b = a + 1; b < targets; ++b) out.push_back(ParameterId::covariance(a, b));
    for (Index a = 0; a < targets; ++a)
        for (Index b = a + 1; b < targets; ++b) out.push_back(ParameterId::correlation(a, b));
    return out;
}

double StudyResult::runtime(std::size_t condition, int replication, std::size_t method) const {
    const std::size_t reps = static_cast<std::size_t>(config.replications);
    return runtimes[(condition * reps + static_cast<std::size_t>(replication)) * config.methods.size() + method];
}

MetricRecord summarize(std::span<const EstimateRow> rows) {
    if (rows.empty()) throw InputError("no estimates to summarize");
    std::vector<double> est, full, lo, hi;
    for (const auto& r : rows) {
        est.push_back(r.estimate);
        full.push_back(r.full_estimate);
        lo.push_back(r.ci_lower);
        hi.push_back(r.ci_upper);
    }
    MetricRecord out;
    out.condition = rows.front().condition;
    out.method = rows.front().method;
    out.parameter = rows.front().parameter;
    const double truth = true_value(full);
    out.prb = truth == 0.0 ? std::numeric_limits<double>::quiet_NaN() : compute_prb(est, full);
    out.cic = compute_cic(lo, hi, truth);
    out.ciw = compute_ciw(lo, hi);
    out.replications = static_cast<int>(rows.size());
    return out;
}

namespace {

struct ReplicationOutput {
    std::vector<EstimateRow> rows;
    std::vector<FailureRow> failures;
    std::vector<double> runtimes;  // per method
};

ReplicationOutput run_replication(const StudyConfig& config, const std::vector<ParameterId>& pids,
                                  std::size_t condition, int rep) {
    const SimulationCondition& cond = config.conditions[condition];
    const std::uint64_t rep_seed = derive_seed(config.seed, condition, static_cast<std::uint64_t>(rep));
    Rng rng(derive_seed(rep_seed, 0));
    const GeneratedData generated = generate_complete(cond, rng);
    const Matrix observed = coarsen(generated.values, generated.roles, cond.n_categories);
    const Amputation amputed = ampute(observed, generated.values, generated.roles, cond.miss_prop, rng);

    std::vector<double> full;
    for (const auto& pid : pids) full.push_back(point_estimate(generated.values, pid));

    ReplicationOutput out;
    out.runtimes.assign(config.methods.size(), 0.0);
    EngineHooks hooks;
    hooks.on_warning = [](const std::string&) {};
    for (std::size_t k = 0; k < config.methods.size(); ++k) {
        ImputationSpec spec = config.imputation;
        spec.strategy = config.methods[k].strategy;
        spec.q = config.methods[k].q;
        spec.seed = derive_seed(rep_seed, k + 1);
        try {
            const auto start = std::chrono::steady_clock::now();
            const MultiplyImputedSet set = run_impute(spec, amputed.data, hooks);
            if (config.record_timing)
                out.runtimes[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            const std::vector<PooledEstimate> pooled = analyze_set(set, pids);
            for (std::size_t p = 0; p < pids.size(); ++p)
                out.rows.push_back(EstimateRow{condition, rep, k, pids[p], pooled[p].estimate, pooled[p].ci_lower,
                                               pooled[p].ci_upper, full[p]});
        } catch (const std::exception& e) {
            out.failures.push_back(FailureRow{condition, rep, k, e.what()});
        }
    }
    return out;
}

std::string format_metric(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

}  // namespace

StudyResult run_study(const StudyConfig& config, const ProgressCallback& progress) {
    config.validate();
    const std::vector<ParameterId> pids =
        config.parameters.empty() ? default_parameters(config.conditions.front().targets) : config.parameters;
    for (const auto& c : config.conditions)
        for (const auto& pid : pids) pid.validate(c.targets);

    const std::size_t reps = static_cast<std::size_t>(config.replications);
    const std::size_t total = config.conditions.size() * reps;
    std::vector<ReplicationOutput> outputs(total);
    std::atomic<std::size_t> next{0}, done{0};
    std::mutex progress_mutex;
    std::vector<std::exception_ptr> errors(total);
    auto worker = [&] {
        for (std::size_t t = next++; t < total; t = next++) {
            try {
                outputs[t] = run_replication(config, pids, t / reps, static_cast<int>(t % reps));
            } catch (...) {
                errors[t] = std::current_exception();
            }
            const std::size_t finished = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(finished, total);
            }
        }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.workers), total);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    StudyResult result;
    result.config = config;
    result.runtimes.assign(total * config.methods.size(), 0.0);
    for (std::size_t t = 0; t < total; ++t) {
        if (errors[t]) {
            // Data generation itself failed: every method loses this replication.
            std::string message = "replication failed";
            try {
                std::rethrow_exception(errors[t]);
            } catch (const std::exception& e) {
                message = e.what();
            }
            for (std::size_t k = 0; k < config.methods.size(); ++k)
                result.failures.push_back(FailureRow{t / reps, static_cast<int>(t % reps), k, message});
            continue;
        }
        auto& o = outputs[t];
        result.estimates.insert(result.estimates.end(), o.rows.begin(), o.rows.end());
        result.failures.insert(result.failures.end(), o.failures.begin(), o.failures.end());
        std::copy(o.runtimes.begin(), o.runtimes.end(),
                  result.runtimes.begin() + static_cast<std::ptrdiff_t>(t * config.methods.size()));
    }

    for (std::size_t c = 0; c < config.conditions.size(); ++c) {
        for (std::size_t k = 0; k < config.methods.size(); ++k) {
            int failures = 0;
            for (const auto& f : result.failures)
                if (f.condition == c && f.method == k) ++failures;
            double runtime = 0.0;
            int timed = 0;
            for (std::size_t r = 0; r < reps; ++r) {
                bool failed = false;
                for (const auto& f : result.failures)
                    if (f.condition == c && f.method == k && f.replication == static_cast<int>(r)) failed = true;
                if (failed) continue;
                runtime += result.runtime(c, static_cast<int>(r), k);
                ++timed;
            }
            for (const auto& pid : pids) {
                std::vector<EstimateRow> rows;
                for (const auto& e : result.estimates)
                    if (e.condition == c && e.method == k && e.parameter == pid) rows.push_back(e);
                MetricRecord rec;
                if (!rows.empty()) {
                    rec = summarize(rows);
                } else {
                    rec.condition = c;
                    rec.method = k;
                    rec.parameter = pid;
                    rec.prb = rec.cic = rec.ciw = std::numeric_limits<double>::quiet_NaN();
                }
                rec.runtime_seconds = timed > 0 ? runtime / timed : 0.0;
                rec.failures = failures;
                result.metrics.push_back(rec);
            }
        }
    }
    return result;
}

namespace {

std::vector<std::string> target_names(int targets) {
    std::vector<std::string> names;
    for (int j = 0; j < targets; ++j) names.push_back("x" + std::to_string(j + 1));
    return names;
}

std::string ncat_label(const SimulationCondition& c) {
    return c.n_categories ? std::to_string(*c.n_categories) : "inf";
}

}  // namespace

void write_metrics_csv(std::ostream& out, const StudyResult& result) {
    out << "condition,n,p,pn,ncat,method,q,parameter,PRB,CIC,CIW,runtime_s,S,failures\n";
    for (const auto& m : result.metrics) {
        const auto& c = result.config.conditions[m.condition];
        const auto& method = result.config.methods[m.method];
        out << quote_csv_field(c.id()) << ',' << c.n << ',' << c.columns() << ',' << format_double(c.pn) << ','
            << ncat_label(c) << ',' << to_string(method.strategy) << ',' << method.q_label() << ','
            << quote_csv_field(m.parameter.label(target_names(c.targets))) << ',' << format_metric(m.prb) << ','
            << format_metric(m.cic) << ',' << format_metric(m.ciw) << ',' << format_double(m.runtime_seconds) << ','
            << m.replications << ',' << m.failures << '\n';
    }
}

void write_estimates_csv(std::ostream& out, const StudyResult& result) {
    out << "condition,replication,method,q,parameter,estimate,ci_lower,ci_upper,full_estimate\n";
    for (const auto& e : result.estimates) {
        const auto& c = result.config.conditions[e.condition];
        const auto& method = result.config.methods[e.method];
        out << quote_csv_field(c.id()) << ',' << e.replication + 1 << ',' << to_string(method.strategy) << ','
            << method.q_label() << ',' << quote_csv_field(e.parameter.label(target_names(c.targets))) << ','
            << format_double(e.estimate) << ',' << format_double(e.ci_lower) << ',' << format_double(e.ci_upper)
            << ',' << format_double(e.full_estimate) << '\n';
    }
}

}  // namespace mipcr
