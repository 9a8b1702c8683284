#pragma once

#include "pcrnn/analysis.hpp"
#include "pcrnn/simulation.hpp"
#include "pcrnn/targets.hpp"
#include "pcrnn/training.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace pcrnn {

// JSON mirrors of the run configurations consumed by the CLI. All fields
// are optional in the document unless noted; absent fields keep the struct
// defaults, so shipped configs only spell out what they pin.

struct TrainRun {
    TrainConfig config;
    std::vector<TargetSpec> specs;  // one per attractor, length p
};

TrainRun train_run_from_json(const nlohmann::json& j);
nlohmann::json train_run_to_json(const TrainRun& run);

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const SimConfig& cfg);

struct AnalysisConfig {
    double theta = 0.5;
    int dwell = 30;
    SelfTransitionMode self_transitions = SelfTransitionMode::merge_short_gaps;
    long skip = 500;  // transient steps dropped before labeling
};

AnalysisConfig analysis_config_from_json(const nlohmann::json& j);
nlohmann::json analysis_config_to_json(const AnalysisConfig& cfg);

nlohmann::json load_json_file(const std::string& path);

}  // namespace pcrnn
