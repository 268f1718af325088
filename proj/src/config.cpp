#include "mipcr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mipcr {

namespace {

using nlohmann::json;

class ConfigError : public InputError {
public:
    ConfigError(const std::string& path, const std::string& what)
        : InputError("config field '" + path + "': " + what) {}
};

void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

template <typename T>
void read(const json& obj, const std::string& path, const std::string& key, T& target) {
    if (!obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(join(path, key), "wrong type");
    }
}

std::optional<int> parse_ncat(const json& v, const std::string& path) {
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return std::nullopt;
        throw ConfigError(path, "expected an integer or \"inf\"");
    }
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer or \"inf\"");
    return v.get<int>();
}

ComponentCount parse_q(const json& v, const std::string& path) {
    try {
        if (v.is_string()) return ComponentCount::parse(v.get<std::string>());
        if (v.is_number_integer()) return ComponentCount::fixed(v.get<Index>());
    } catch (const InputError& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(path, "expected a positive integer or \"max\"");
}

template <typename F>
void validate_field(const std::string& path, F&& check) {
    try {
        check();
    } catch (const InputError& e) {
        throw ConfigError(path, e.what());
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(root, "",
                   {"seed", "replications", "workers", "output_dir", "record_timing", "condition", "grid", "methods",
                    "imputation"});

    RunConfig cfg;
    StudyConfig& study = cfg.study;
    read(root, "", "seed", study.seed);
    read(root, "", "replications", study.replications);
    read(root, "", "workers", study.workers);
    read(root, "", "output_dir", cfg.output_dir);
    read(root, "", "record_timing", study.record_timing);
    if (study.replications < 1) throw ConfigError("replications", "must be at least 1");
    if (study.workers < 1) throw ConfigError("workers", "must be at least 1");

    SimulationCondition base;
    if (root.contains("condition")) {
        const json& c = root.at("condition");
        reject_unknown(c, "condition",
                       {"n", "factors", "targets", "mar_predictors", "items_per_other_factor", "loading", "high_corr",
                        "low_corr", "pn", "ncat", "target_mean", "target_var", "miss_prop"});
        read(c, "condition", "n", base.n);
        read(c, "condition", "factors", base.factors);
        read(c, "condition", "targets", base.targets);
        read(c, "condition", "mar_predictors", base.mar_predictors);
        read(c, "condition", "items_per_other_factor", base.items_per_other_factor);
        read(c, "condition", "loading", base.loading);
        read(c, "condition", "high_corr", base.high_corr);
        read(c, "condition", "low_corr", base.low_corr);
        read(c, "condition", "pn", base.pn);
        read(c, "condition", "target_mean", base.target_mean);
        read(c, "condition", "target_var", base.target_var);
        read(c, "condition", "miss_prop", base.miss_prop);
        if (c.contains("ncat")) base.n_categories = parse_ncat(c.at("ncat"), "condition.ncat");
    }

    std::vector<double> pns{base.pn};
    std::vector<std::optional<int>> ncats{base.n_categories};
    if (root.contains("grid")) {
        const json& g = root.at("grid");
        reject_unknown(g, "grid", {"pn", "ncat"});
        if (g.contains("pn")) {
            if (!g.at("pn").is_array() || g.at("pn").empty()) throw ConfigError("grid.pn", "expected a non-empty array");
            read(g, "grid", "pn", pns);
        }
        if (g.contains("ncat")) {
            const json& arr = g.at("ncat");
            if (!arr.is_array() || arr.empty()) throw ConfigError("grid.ncat", "expected a non-empty array");
            ncats.clear();
            for (std::size_t k = 0; k < arr.size(); ++k)
                ncats.push_back(parse_ncat(arr[k], "grid.ncat[" + std::to_string(k) + "]"));
        }
    }
    for (double pn : pns)
        for (const auto& ncat : ncats) {
            SimulationCondition c = base;
            c.pn = pn;
            c.n_categories = ncat;
            validate_field("condition", [&] { c.validate(); });
            study.conditions.push_back(c);
        }

    if (!root.contains("methods")) throw ConfigError("methods", "required");
    const json& methods = root.at("methods");
    if (!methods.is_array() || methods.empty()) throw ConfigError("methods", "expected a non-empty array");
    for (std::size_t k = 0; k < methods.size(); ++k) {
        const std::string path = "methods[" + std::to_string(k) + "]";
        const json& m = methods[k];
        reject_unknown(m, path, {"method", "q"});
        std::string name;
        read(m, path, "method", name);
        Strategy strategy{};
        validate_field(path + ".method", [&] { strategy = parse_strategy(name); });
        std::vector<ComponentCount> qs;
        if (m.contains("q")) {
            if (!uses_components(strategy)) throw ConfigError(path + ".q", "only PCR methods take a component count");
            const json& q = m.at("q");
            if (q.is_array()) {
                for (std::size_t t = 0; t < q.size(); ++t)
                    qs.push_back(parse_q(q[t], path + ".q[" + std::to_string(t) + "]"));
            } else {
                qs.push_back(parse_q(q, path + ".q"));
            }
        } else {
            qs.push_back(ComponentCount::max());
        }
        for (const auto& q : qs) study.methods.push_back(MethodSpec{strategy, q});
    }

    ImputationSpec& imp = study.imputation;
    if (root.contains("imputation")) {
        const json& i = root.at("imputation");
        reject_unknown(i, "imputation",
                       {"imputer", "pmm_donors", "chains", "iterations", "corr_threshold", "prepass_threshold",
                        "prepass_iterations", "ridge"});
        std::string imputer = to_string(imp.imputer.method);
        read(i, "imputation", "imputer", imputer);
        validate_field("imputation.imputer", [&] { imp.imputer.method = parse_imputer_method(imputer); });
        read(i, "imputation", "pmm_donors", imp.imputer.pmm_donors);
        read(i, "imputation", "chains", imp.chains);
        read(i, "imputation", "iterations", imp.iterations);
        read(i, "imputation", "corr_threshold", imp.corr_threshold);
        read(i, "imputation", "prepass_threshold", imp.prepass_threshold);
        read(i, "imputation", "prepass_iterations", imp.prepass_iterations);
        read(i, "imputation", "ridge", imp.ridge);
    }
    validate_field("imputation", [&] { study.validate(); });
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

}  // namespace mipcr
