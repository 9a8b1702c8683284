#include "pcrnn/config_io.hpp"

#include <fstream>

namespace pcrnn {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (j.contains(key))
        return j.at(key).get<T>();
    return fallback;
}

NoiseSchedule schedule_from_json(const json& j) {
    NoiseSchedule sched;
    sched.kind = schedule_kind_from_string(j.at("kind").get<std::string>());
    sched.a = j.at("a").get<double>();
    sched.b = get_or(j, "b", sched.b);
    sched.s = get_or(j, "s", sched.s);
    sched.s2 = get_or(j, "s2", sched.s2);
    return sched;
}

json schedule_to_json(const NoiseSchedule& sched) {
    json j;
    j["kind"] = to_string(sched.kind);
    j["a"] = sched.a;
    if (sched.kind != ScheduleKind::constant) {
        j["b"] = sched.b;
        j["s"] = sched.s;
        if (sched.kind == ScheduleKind::piecewise && sched.s2 > 0.0)
            j["s2"] = sched.s2;
    }
    return j;
}

}  // namespace

TrainRun train_run_from_json(const json& j) {
    TrainRun run;
    TrainConfig& cfg = run.config;
    cfg.iterations = get_or(j, "iterations", cfg.iterations);
    cfg.learning_rate = get_or(j, "learning_rate", cfg.learning_rate);
    cfg.adam_beta1 = get_or(j, "adam_beta1", cfg.adam_beta1);
    cfg.adam_beta2 = get_or(j, "adam_beta2", cfg.adam_beta2);
    cfg.adam_epsilon = get_or(j, "adam_epsilon", cfg.adam_epsilon);
    if (j.contains("rollout_mode"))
        cfg.rollout_mode = rollout_mode_from_string(j.at("rollout_mode").get<std::string>());
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.init_gain = get_or(j, "init_gain", cfg.init_gain);
    cfg.train_h_init = get_or(j, "train_h_init", cfg.train_h_init);
    cfg.rollout_noise = get_or(j, "rollout_noise", cfg.rollout_noise);
    cfg.rollout_noise_anneal = get_or(j, "rollout_noise_anneal", cfg.rollout_noise_anneal);

    const json& dims = j.at("dims");
    cfg.dims.n = dims.at("n").get<int>();
    cfg.dims.p = dims.at("p").get<int>();
    cfg.dims.m = get_or(dims, "m", 2);
    cfg.dims.d = get_or(dims, "d", cfg.dims.n / 2);

    if (j.contains("precisions")) {
        const json& prec = j.at("precisions");
        cfg.precisions.sigma_x = get_or(prec, "sigma_x", cfg.precisions.sigma_x);
        cfg.precisions.sigma_h = get_or(prec, "sigma_h", cfg.precisions.sigma_h);
        cfg.precisions.sigma_c = get_or(prec, "sigma_c", cfg.precisions.sigma_c);
        cfg.precisions.tau = get_or(prec, "tau", cfg.precisions.tau);
        cfg.precisions.cause_rate = get_or(prec, "cause_rate", cfg.precisions.cause_rate);
        cfg.precisions.cause_step_limit =
            get_or(prec, "cause_step_limit", cfg.precisions.cause_step_limit);
    }

    const json& targets = j.at("targets");
    const auto shapes = targets.at("shapes").get<std::vector<std::string>>();
    if (static_cast<int>(shapes.size()) != cfg.dims.p)
        throw std::invalid_argument("targets.shapes must list exactly p shapes");
    for (const std::string& name : shapes) {
        TargetSpec spec;
        spec.shape = shape_from_string(name);
        spec.period = get_or(targets, "period", spec.period);
        spec.length = get_or(targets, "length", spec.length);
        spec.amplitude = get_or(targets, "amplitude", spec.amplitude);
        run.specs.push_back(spec);
    }
    cfg.validate();
    for (const TargetSpec& spec : run.specs)
        spec.validate();
    return run;
}

json train_run_to_json(const TrainRun& run) {
    const TrainConfig& cfg = run.config;
    json j;
    j["iterations"] = cfg.iterations;
    j["learning_rate"] = cfg.learning_rate;
    j["adam_beta1"] = cfg.adam_beta1;
    j["adam_beta2"] = cfg.adam_beta2;
    j["adam_epsilon"] = cfg.adam_epsilon;
    j["rollout_mode"] = to_string(cfg.rollout_mode);
    j["seed"] = cfg.seed;
    j["init_gain"] = cfg.init_gain;
    j["train_h_init"] = cfg.train_h_init;
    if (cfg.rollout_noise > 0.0) {
        j["rollout_noise"] = cfg.rollout_noise;
        j["rollout_noise_anneal"] = cfg.rollout_noise_anneal;
    }
    j["dims"] = {{"n", cfg.dims.n}, {"p", cfg.dims.p}, {"d", cfg.dims.d}, {"m", cfg.dims.m}};
    j["precisions"] = {{"sigma_x", cfg.precisions.sigma_x},
                       {"sigma_h", cfg.precisions.sigma_h},
                       {"sigma_c", cfg.precisions.sigma_c},
                       {"tau", cfg.precisions.tau},
                       {"cause_rate", cfg.precisions.cause_rate}};
    if (std::isfinite(cfg.precisions.cause_step_limit))
        j["precisions"]["cause_step_limit"] = cfg.precisions.cause_step_limit;
    json shapes = json::array();
    for (const TargetSpec& spec : run.specs)
        shapes.push_back(to_string(spec.shape));
    j["targets"] = {{"shapes", shapes}};
    if (!run.specs.empty()) {
        j["targets"]["period"] = run.specs.front().period;
        j["targets"]["length"] = run.specs.front().length;
        j["targets"]["amplitude"] = run.specs.front().amplitude;
    }
    return j;
}

SimConfig sim_config_from_json(const json& j) {
    SimConfig cfg;
    cfg.mode = sim_mode_from_string(j.at("mode").get<std::string>());
    cfg.steps = get_or<long>(j, "steps", cfg.steps);
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.noise_amplitude = get_or(j, "noise_amplitude", cfg.noise_amplitude);
    cfg.sigma_x = get_or(j, "sigma_x", cfg.sigma_x);
    cfg.tau = get_or(j, "tau", cfg.tau);
    cfg.cause_rate = get_or(j, "cause_rate", cfg.cause_rate);
    cfg.cause_step_limit = get_or(j, "cause_step_limit", cfg.cause_step_limit);
    cfg.schedule_c = schedule_from_json(j.at("schedule_c"));
    cfg.schedule_h = schedule_from_json(j.at("schedule_h"));
    if (j.contains("c_init")) {
        const auto values = j.at("c_init").get<std::vector<double>>();
        cfg.c_init.resize(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i)
            cfg.c_init[static_cast<Eigen::Index>(i)] = values[i];
    }
    cfg.record_stride = get_or<long>(j, "record_stride", cfg.record_stride);
    cfg.record_state = get_or(j, "record_state", cfg.record_state);
    cfg.validate();
    return cfg;
}

json sim_config_to_json(const SimConfig& cfg) {
    json j;
    j["mode"] = to_string(cfg.mode);
    j["steps"] = cfg.steps;
    j["seed"] = cfg.seed;
    j["noise_amplitude"] = cfg.noise_amplitude;
    j["sigma_x"] = cfg.sigma_x;
    j["tau"] = cfg.tau;
    j["cause_rate"] = cfg.cause_rate;
    if (std::isfinite(cfg.cause_step_limit))
        j["cause_step_limit"] = cfg.cause_step_limit;
    j["schedule_c"] = schedule_to_json(cfg.schedule_c);
    j["schedule_h"] = schedule_to_json(cfg.schedule_h);
    if (cfg.c_init.size() != 0) {
        std::vector<double> values(cfg.c_init.data(),
                                   cfg.c_init.data() + cfg.c_init.size());
        j["c_init"] = values;
    }
    j["record_stride"] = cfg.record_stride;
    j["record_state"] = cfg.record_state;
    return j;
}

AnalysisConfig analysis_config_from_json(const json& j) {
    AnalysisConfig cfg;
    cfg.theta = get_or(j, "theta", cfg.theta);
    cfg.dwell = get_or(j, "dwell", cfg.dwell);
    if (j.contains("self_transitions"))
        cfg.self_transitions =
            self_transition_mode_from_string(j.at("self_transitions").get<std::string>());
    cfg.skip = get_or<long>(j, "skip", cfg.skip);
    if (!(cfg.theta > 0.0) || cfg.dwell < 1 || cfg.skip < 0)
        throw std::invalid_argument("invalid analysis config");
    return cfg;
}

json analysis_config_to_json(const AnalysisConfig& cfg) {
    return json{{"theta", cfg.theta},
                {"dwell", cfg.dwell},
                {"self_transitions", to_string(cfg.self_transitions)},
                {"skip", cfg.skip}};
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    return json::parse(in);  // error messages carry byte position
}

}  // namespace pcrnn
