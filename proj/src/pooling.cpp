#include "mipcr/pooling.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "mipcr/engine.hpp"

namespace mipcr {

std::string to_string(ParameterKind kind) {
    switch (kind) {
    case ParameterKind::mean: return "mean";
    case ParameterKind::variance: return "var";
    case ParameterKind::covariance: return "cov";
    case ParameterKind::correlation: return "cor";
    }
    return "unknown";
}

ParameterId ParameterId::covariance(Index a, Index b) { return {ParameterKind::covariance, a, b}; }
ParameterId ParameterId::correlation(Index a, Index b) { return {ParameterKind::correlation, a, b}; }

void ParameterId::validate(Index n_cols) const {
    if (first < 0 || first >= n_cols) throw InputError("parameter column out of range");
    if (binary()) {
        if (second < 0 || second >= n_cols) throw InputError("parameter column out of range");
        if (second == first) throw InputError("covariance/correlation needs two distinct columns");
    }
}

std::string ParameterId::label(const std::vector<std::string>& names) const {
    auto name = [&](Index c) {
        return c >= 0 && c < static_cast<Index>(names.size()) ? names[static_cast<std::size_t>(c)]
                                                              : "x" + std::to_string(c + 1);
    };
    std::string out = to_string(kind) + "(" + name(first);
    if (binary()) out += "," + name(second);
    return out + ")";
}

ParameterId parse_parameter(const std::string& text, const std::vector<std::string>& names) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t pos; (pos = text.find(':', start)) != std::string::npos; start = pos + 1)
        parts.push_back(text.substr(start, pos - start));
    parts.push_back(text.substr(start));
    auto column = [&](const std::string& name) {
        for (std::size_t j = 0; j < names.size(); ++j)
            if (names[j] == name) return static_cast<Index>(j);
        throw InputError("parameter '" + text + "' names unknown column '" + name + "'");
    };
    const std::string& kind = parts.front();
    if ((kind == "mean" || kind == "var") && parts.size() == 2)
        return kind == "mean" ? ParameterId::mean(column(parts[1])) : ParameterId::variance(column(parts[1]));
    if ((kind == "cov" || kind == "cor") && parts.size() == 3) {
        ParameterId pid = kind == "cov" ? ParameterId::covariance(column(parts[1]), column(parts[2]))
                                        : ParameterId::correlation(column(parts[1]), column(parts[2]));
        pid.validate(static_cast<Index>(names.size()));
        return pid;
    }
    throw InputError("cannot parse parameter '" + text + "' (expected mean:a, var:a, cov:a:b or cor:a:b)");
}

namespace {

double sample_covariance(const Matrix& m, Index a, Index b) {
    const double n = static_cast<double>(m.rows());
    const double ma = m.col(a).mean(), mb = m.col(b).mean();
    return ((m.col(a).array() - ma) * (m.col(b).array() - mb)).sum() / (n - 1.0);
}

}  // namespace

double sample_correlation(const Matrix& m, Index a, Index b) {
    const double sab = sample_covariance(m, a, b);
    const double saa = sample_covariance(m, a, a);
    const double sbb = sample_covariance(m, b, b);
    if (!(saa > 0.0) || !(sbb > 0.0)) throw InputError("correlation undefined for a zero-variance column");
    return sab / std::sqrt(saa * sbb);
}

Estimate estimate_parameter(const Matrix& completion, const ParameterId& pid) {
    pid.validate(completion.cols());
    const Index rows = completion.rows();
    if (rows < 4) throw InputError("parameter estimation needs at least 4 rows");
    const double n = static_cast<double>(rows);
    switch (pid.kind) {
    case ParameterKind::mean: {
        const double s2 = sample_covariance(completion, pid.first, pid.first);
        return {completion.col(pid.first).mean(), s2 / n};
    }
    case ParameterKind::variance: {
        const double s2 = sample_covariance(completion, pid.first, pid.first);
        return {s2, 2.0 * s2 * s2 / (n - 1.0)};
    }
    case ParameterKind::covariance: {
        const double c = sample_covariance(completion, pid.first, pid.second);
        const double sx = sample_covariance(completion, pid.first, pid.first);
        const double sy = sample_covariance(completion, pid.second, pid.second);
        return {c, (c * c + sx * sy) / (n - 1.0)};
    }
    case ParameterKind::correlation: {
        const double r = sample_correlation(completion, pid.first, pid.second);
        return {std::atanh(r), 1.0 / (n - 3.0)};
    }
    }
    return {};
}

double point_estimate(const Matrix& complete, const ParameterId& pid) {
    const Estimate e = estimate_parameter(complete, pid);
    return pid.kind == ParameterKind::correlation ? std::tanh(e.value) : e.value;
}

double barnard_rubin_df(double within, double between, int m, double complete_df) {
    if (m < 2) throw InputError("degrees of freedom need at least 2 imputations");
    if (!(between > 0.0)) return complete_df;
    const double total = within + (1.0 + 1.0 / m) * between;
    const double lambda = (1.0 + 1.0 / m) * between / total;
    const double df_old = (m - 1.0) / (lambda * lambda);
    const double df_obs = (complete_df + 1.0) / (complete_df + 3.0) * complete_df * (1.0 - lambda);
    if (!(df_obs > 0.0)) return df_old;
    return df_old * df_obs / (df_old + df_obs);
}

PooledEstimate rubin_pool(std::span<const Estimate> estimates, ParameterKind kind, double complete_df) {
    const auto m = static_cast<int>(estimates.size());
    if (m < 2) throw InputError("pooling needs at least 2 imputations");
    if (!(complete_df > 0.0)) throw InputError("complete-data degrees of freedom must be positive");
    double qbar = 0.0, ubar = 0.0;
    for (const Estimate& e : estimates) {
        qbar += e.value;
        ubar += e.variance;
    }
    qbar /= m;
    ubar /= m;
    double b = 0.0;
    for (const Estimate& e : estimates) b += (e.value - qbar) * (e.value - qbar);
    b /= (m - 1);

    PooledEstimate out;
    out.m = m;
    out.within_var = ubar;
    out.between_var = b;
    out.total_var = ubar + (1.0 + 1.0 / m) * b;
    out.df = barnard_rubin_df(ubar, b, m, complete_df);
    const boost::math::students_t dist(out.df);
    const double half = boost::math::quantile(dist, 0.975) * std::sqrt(out.total_var);
    out.estimate = qbar;
    out.ci_lower = qbar - half;
    out.ci_upper = qbar + half;
    if (kind == ParameterKind::correlation) {
        out.estimate = std::tanh(qbar);
        out.ci_lower = std::tanh(out.ci_lower);
        out.ci_upper = std::tanh(out.ci_upper);
    }
    return out;
}

std::vector<PooledEstimate> analyze_completions(std::span<const Matrix> completions,
                                                const std::vector<ParameterId>& pids) {
    std::vector<PooledEstimate> out;
    out.reserve(pids.size());
    if (pids.empty()) return out;
    if (completions.empty()) throw InputError("no completions to analyze");
    const Index n = completions.front().rows();
    std::vector<Estimate> per(completions.size());
    for (const ParameterId& pid : pids) {
        for (std::size_t k = 0; k < completions.size(); ++k) per[k] = estimate_parameter(completions[k], pid);
        out.push_back(rubin_pool(per, pid.kind, static_cast<double>(n - pid.estimand_inputs())));
    }
    return out;
}

std::vector<PooledEstimate> analyze_set(const MultiplyImputedSet& set, const std::vector<ParameterId>& pids) {
    return analyze_completions(set.completions, pids);
}

}  // namespace mipcr
