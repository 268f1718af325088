#ifndef MIPCR_CONFIG_HPP
#define MIPCR_CONFIG_HPP

#include <string>

#include "mipcr/study.hpp"

namespace mipcr {

/// Parsed simulation configuration (JSON). Top-level keys:
///   seed, replications, workers, output_dir, record_timing,
///   condition   - base SimulationCondition fields,
///   grid        - {"pn": [...], "ncat": [... "inf" or integers]},
///   methods     - [{"method": "pcr-vbv", "q": [1, 7, "max"]}, {"method": "oracle"}],
///   imputation  - imputer, pmm_donors, chains, iterations, corr_threshold,
///                 prepass_threshold, prepass_iterations, ridge.
/// Unknown keys are rejected with the offending path.
struct RunConfig {
    StudyConfig study;
    std::string output_dir = ".";
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace mipcr

#endif
