#include "mipcr/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "mipcr/config.hpp"
#include "mipcr/data.hpp"
#include "mipcr/engine.hpp"
#include "mipcr/pca.hpp"
#include "mipcr/pooling.hpp"
#include "mipcr/study.hpp"

namespace mipcr {

namespace {

namespace fs = std::filesystem;

class UsageError : public InputError {
public:
    using InputError::InputError;
};

struct GlobalOptions {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string na_token = "NA";
    int workers = 1;
    bool workers_given = false;
    std::string out_dir;
};

fs::path output_path(const GlobalOptions& g, const std::string& name) {
    fs::path dir = g.out_dir.empty() ? fs::path(".") : fs::path(g.out_dir);
    return dir / name;
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::vector<Index> resolve_columns(const IncompleteData& data, const std::vector<std::string>& names) {
    std::vector<Index> out;
    for (const auto& n : names) out.push_back(data.column_index(n));
    return out;
}

// ---- simulate -------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    RunConfig cfg = load_run_config(config_path);
    if (g.seed_given) cfg.study.seed = g.seed;
    if (g.workers_given) cfg.study.workers = g.workers;
    if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;

    const StudyResult result = run_study(cfg.study);
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "metrics.csv", std::ios::binary);
        write_metrics_csv(f, result);
    }
    {
        std::ofstream f(dir / "estimates.csv", std::ios::binary);
        write_estimates_csv(f, result);
    }
    for (const auto& fail : result.failures)
        err << "replication " << fail.replication + 1 << " of " << cfg.study.conditions[fail.condition].id() << " ("
            << cfg.study.methods[fail.method].label() << ") failed: " << fail.message << '\n';
    out << "wrote " << (dir / "metrics.csv").string() << " and " << (dir / "estimates.csv").string() << " ("
        << result.metrics.size() << " metric rows, " << result.failures.size() << " failures)\n";
    return kExitOk;
}

// ---- impute ---------------------------------------------------------------

struct ImputeOptions {
    std::string input;
    std::string method = "pcr-vbv";
    std::string npc = "max";
    int m = 5;
    int maxit = 20;
    std::vector<std::string> targets, analysis_cols, mar_cols;
    std::string out_prefix = "imputed";
    std::string imputer = "pmm";
    int donors = 5;
    double threshold = 0.1;
    double prepass_threshold = 0.3;
};

int cmd_impute(const ImputeOptions& o, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
    ImputationSpec spec;
    spec.strategy = parse_strategy(o.method);
    spec.q = ComponentCount::parse(o.npc);
    spec.chains = o.m;
    spec.iterations = o.maxit;
    spec.seed = g.seed;
    spec.imputer.method = parse_imputer_method(o.imputer);
    spec.imputer.pmm_donors = o.donors;
    spec.corr_threshold = o.threshold;
    spec.prepass_threshold = o.prepass_threshold;
    spec.validate();
    if (spec.strategy == Strategy::pcr_aux && o.analysis_cols.empty())
        throw UsageError("--method pcr-aux requires --analysis-cols");
    if (spec.strategy == Strategy::oracle && o.mar_cols.empty())
        throw UsageError("--method oracle requires --mar-cols");

    IncompleteData data = load_csv(o.input, g.na_token);
    std::vector<ColumnRole> roles(static_cast<std::size_t>(data.cols()), ColumnRole::auxiliary);
    try {
        for (Index c : resolve_columns(data, o.analysis_cols)) roles[static_cast<std::size_t>(c)] = ColumnRole::analysis_target;
        for (Index c : resolve_columns(data, o.mar_cols)) {
            if (roles[static_cast<std::size_t>(c)] == ColumnRole::analysis_target)
                throw UsageError("column '" + data.names()[static_cast<std::size_t>(c)] +
                                 "' cannot be both an analysis and a mar column");
            roles[static_cast<std::size_t>(c)] = ColumnRole::mar_predictor;
        }
        spec.visit_columns = resolve_columns(data, o.targets);
    } catch (const UsageError&) {
        throw;
    } catch (const InputError& e) {
        throw UsageError(e.what());
    }
    data = data.with_roles(std::move(roles));

    EngineHooks hooks;
    hooks.on_warning = [&](const std::string& msg) { err << "warning: " << msg << '\n'; };
    Index fewest = -1, most = -1;
    hooks.on_pca = [&](const PcaEvent& e) {
        fewest = fewest < 0 ? e.components : std::min(fewest, e.components);
        most = std::max(most, e.components);
    };
    const MultiplyImputedSet set = run_impute(spec, data, hooks);

    for (int k = 0; k < set.m(); ++k) {
        const fs::path path = output_path(g, o.out_prefix + "_" + std::to_string(k + 1) + ".csv");
        ensure_parent(path);
        write_csv(path.string(), set.completions[static_cast<std::size_t>(k)], data.names());
    }
    const fs::path trace_path = output_path(g, "trace.csv");
    ensure_parent(trace_path);
    std::ofstream trace(trace_path, std::ios::binary);
    trace << "chain,iteration,column,mean,sd\n";
    for (const auto& t : set.trace)
        trace << t.chain << ',' << t.iteration << ',' << quote_csv_field(data.names()[static_cast<std::size_t>(t.column)])
              << ',' << format_double(t.mean) << ',' << format_double(t.sd) << '\n';
    out << "imputed " << data.missing_count() << " cells with " << to_string(spec.strategy) << "; wrote " << set.m()
        << " completions and " << trace_path.string() << '\n';
    if (most >= 0) {
        out << "components: " << fewest;
        if (most != fewest) out << " to " << most;
        out << '\n';
    }
    return kExitOk;
}

// ---- pool -----------------------------------------------------------------

int cmd_pool(const std::vector<std::string>& files, const std::vector<std::string>& params, const std::string& out_file,
             const GlobalOptions& g, std::ostream& out) {
    if (files.size() < 2) throw UsageError("pool needs at least 2 imputed files");
    if (params.empty()) throw UsageError("pool needs --params");
    std::vector<Matrix> completions;
    std::vector<std::string> names;
    for (const auto& f : files) {
        IncompleteData d = load_csv(f, g.na_token);
        if (d.missing_count() > 0) throw InputError("file '" + f + "' still has missing values");
        if (completions.empty()) {
            names = d.names();
        } else if (d.names() != names || d.rows() != completions.front().rows()) {
            throw InputError("file '" + f + "' does not match the shape and header of '" + files.front() + "'");
        }
        completions.push_back(d.values());
    }
    std::vector<ParameterId> pids;
    for (const auto& p : params) pids.push_back(parse_parameter(p, names));
    const std::vector<PooledEstimate> pooled = analyze_completions(completions, pids);

    const fs::path path = out_file.empty() ? output_path(g, "pooled.csv") : fs::path(out_file);
    ensure_parent(path);
    std::ofstream f(path, std::ios::binary);
    f << "parameter,estimate,within_var,between_var,total_var,df,ci_lower,ci_upper,m\n";
    for (std::size_t k = 0; k < pids.size(); ++k) {
        const auto& e = pooled[k];
        f << quote_csv_field(pids[k].label(names)) << ',' << format_double(e.estimate) << ','
          << format_double(e.within_var) << ',' << format_double(e.between_var) << ',' << format_double(e.total_var)
          << ',' << format_double(e.df) << ',' << format_double(e.ci_lower) << ',' << format_double(e.ci_upper) << ','
          << e.m << '\n';
    }
    out << "wrote " << path.string() << '\n';
    return kExitOk;
}

// ---- enumerate ------------------------------------------------------------

int cmd_enumerate(const std::string& input, const std::string& rule_name, bool complete_cases, int replicates,
                  double quantile, const GlobalOptions& g, std::ostream& out) {
    EnumerationRule rule;
    rule.rule = parse_retention_rule(rule_name);
    rule.replicates = replicates;
    rule.quantile = quantile;
    rule.validate();
    const IncompleteData data = load_csv(input, g.na_token);
    Matrix values = data.values();
    if (data.missing_count() > 0) {
        if (!complete_cases)
            throw UsageError("input has missing values; pass --complete-cases to use only fully observed rows");
        values = select_rows(data.values(), complete_case_rows(data));
        if (values.rows() < 2) throw InputError("fewer than 2 complete cases");
    }
    Rng rng(g.seed);
    const Index q = enumerate_components(values, rule, rng);
    const Vector spectrum = correlation_spectrum(values);
    out << "rule," << to_string(rule.rule) << '\n';
    out << "rows," << values.rows() << '\n';
    out << "retained," << q << '\n';
    out << "component,eigenvalue\n";
    for (Index k = 0; k < spectrum.size(); ++k) out << k + 1 << ',' << format_double(spectrum(k)) << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multiple imputation with principal component regression"};
    app.require_subcommand(1);
    GlobalOptions g;

    auto add_globals = [&](CLI::App* sub) {
        sub->add_option("--seed", g.seed, "Root random seed")->each([&](const std::string&) { g.seed_given = true; });
        sub->add_option("--na-token", g.na_token, "Token marking missing cells");
        sub->add_option("--workers", g.workers, "Worker threads (simulate)")
            ->check(CLI::PositiveNumber)
            ->each([&](const std::string&) { g.workers_given = true; });
        sub->add_option("--out-dir", g.out_dir, "Output directory");
    };

    std::string config_path;
    auto* simulate = app.add_subcommand("simulate", "Run a simulation grid from a JSON config");
    simulate->add_option("config", config_path, "Config file")->required();
    add_globals(simulate);

    ImputeOptions io;
    auto* impute = app.add_subcommand("impute", "Multiply impute a CSV file");
    impute->add_option("input", io.input, "Input CSV")->required();
    impute->add_option("--method", io.method, "pcr-vbv, pcr-all, pcr-aux, quickpred or oracle");
    impute->add_option("--npc", io.npc, "Number of components or 'max'");
    impute->add_option("--m", io.m, "Number of imputations");
    impute->add_option("--maxit", io.maxit, "Iterations per chain");
    impute->add_option("--targets", io.targets, "Columns to impute (default: all incomplete); other incomplete columns keep a random fill")->delimiter(',');
    impute->add_option("--analysis-cols", io.analysis_cols, "Analysis-model columns")->delimiter(',');
    impute->add_option("--mar-cols", io.mar_cols, "Known predictors of missingness")->delimiter(',');
    impute->add_option("--out-prefix", io.out_prefix, "Prefix for completed files");
    impute->add_option("--imputer", io.imputer, "pmm or bayesian-normal");
    impute->add_option("--donors", io.donors, "PMM donor pool size");
    impute->add_option("--threshold", io.threshold, "quickpred correlation threshold");
    impute->add_option("--prepass-threshold", io.prepass_threshold, "Pre-pass correlation threshold");
    add_globals(impute);

    std::vector<std::string> pool_files, pool_params;
    std::string pool_out;
    auto* pool = app.add_subcommand("pool", "Pool estimates across completed files with Rubin's rules");
    pool->add_option("files", pool_files, "Completed CSV files")->required();
    pool->add_option("--params", pool_params, "e.g. mean:x1,var:x1,cov:x1:x2,cor:x1:x2")->delimiter(',')->required();
    pool->add_option("--out", pool_out, "Output file (default <out-dir>/pooled.csv)");
    add_globals(pool);

    std::string enum_input, enum_rule = "kaiser";
    bool enum_cc = false;
    int enum_reps = 100;
    double enum_quantile = 0.95;
    auto* enumerate = app.add_subcommand("enumerate", "Count components to retain");
    enumerate->add_option("input", enum_input, "Input CSV")->required();
    enumerate->add_option("--rule", enum_rule, "kaiser, pa, oc or af");
    enumerate->add_flag("--complete-cases", enum_cc, "Use only fully observed rows");
    enumerate->add_option("--replicates", enum_reps, "Parallel-analysis replicates");
    enumerate->add_option("--quantile", enum_quantile, "Parallel-analysis quantile");
    add_globals(enumerate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        const auto chosen = app.get_subcommands();
        out << (chosen.empty() ? app.help() : chosen.front()->help());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(config_path, g, out, err);
        if (*impute) return cmd_impute(io, g, out, err);
        if (*pool) return cmd_pool(pool_files, pool_params, pool_out, g, out);
        if (*enumerate) return cmd_enumerate(enum_input, enum_rule, enum_cc, enum_reps, enum_quantile, g, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace mipcr
