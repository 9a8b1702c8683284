// pcrnn command-line front end: train attractors, run closed-loop
// simulations, estimate transition matrices, check gradients, export the
// prior landscape. All commands are deterministic given --seed and write
// only under their --out prefix.

#include "pcrnn/analysis.hpp"
#include "pcrnn/config_io.hpp"
#include "pcrnn/gradcheck.hpp"
#include "pcrnn/manifest.hpp"
#include "pcrnn/model.hpp"
#include "pcrnn/simulation.hpp"
#include "pcrnn/targets.hpp"
#include "pcrnn/training.hpp"
#include "pcrnn/weights_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using nlohmann::json;
using namespace pcrnn;

constexpr int exit_ok = 0;
constexpr int exit_config_error = 1;
constexpr int exit_divergence = 2;
constexpr int exit_dim_mismatch = 3;
constexpr int exit_tolerance = 4;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

void ensure_parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty())
        std::filesystem::create_directories(parent);
}

void write_loss_csv(const std::vector<double>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << "iteration,loss\n";
    char buf[32];
    for (std::size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", curve[i]);
        out << (i + 1) << "," << buf << "\n";
    }
}

int cmd_train(const std::string& config_path, const std::string& out_prefix,
              std::optional<std::uint64_t> seed, bool quiet) {
    Timer timer;
    TrainRun run;
    try {
        run = train_run_from_json(load_json_file(config_path));
    } catch (const std::exception& e) {
        std::cerr << "train: config error: " << e.what() << "\n";
        return exit_config_error;
    }
    if (seed)
        run.config.seed = *seed;

    ensure_parent_dir(out_prefix + "weights.json");
    TrainResult result;
    try {
        result = train(run.config, run.specs);
    } catch (const DivergenceError& e) {
        std::cerr << "train: " << e.what() << "\n";
        return exit_divergence;
    }

    const std::string weights_path = out_prefix + "weights.json";
    const std::string loss_path = out_prefix + "loss.csv";
    save_weights(result.weights, weights_path);
    write_loss_csv(result.loss_curve, loss_path);

    RunManifest manifest;
    manifest.command = "train";
    manifest.config_echo = train_run_to_json(run);
    manifest.seed = run.config.seed;
    manifest.weights_path = weights_path;
    manifest.weights_hash = file_hash(weights_path);
    manifest.outputs = {weights_path, loss_path};
    manifest.duration_seconds = timer.seconds();
    save_manifest(manifest, out_prefix + "manifest.json");

    if (!quiet) {
        std::cout << "trained " << run.config.iterations << " iterations";
        if (!result.loss_curve.empty())
            std::cout << ", final loss " << result.loss_curve.back();
        std::cout << " -> " << weights_path << "\n";
    }
    return exit_ok;
}

int run_one_simulation(const ModelWeights& weights, const std::string& weights_path,
                       const SimConfig& cfg, const std::string& out_prefix,
                       bool quiet);

// --sweep N fans out N independent runs with derived seeds (seed + run
// index) under out_prefix + "run<i>_".
int cmd_simulate(const std::string& weights_path, const std::string& config_path,
                 const std::string& out_prefix, std::optional<std::uint64_t> seed,
                 int sweep, bool quiet) {
    ModelWeights weights;
    SimConfig cfg;
    try {
        weights = load_weights(weights_path);
        cfg = sim_config_from_json(load_json_file(config_path));
    } catch (const std::exception& e) {
        std::cerr << "simulate: config error: " << e.what() << "\n";
        return exit_config_error;
    }
    if (seed)
        cfg.seed = *seed;
    if (sweep > 1) {
        int status = exit_ok;
        for (int i = 0; i < sweep; ++i) {
            SimConfig run_cfg = cfg;
            run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
            const int rc = run_one_simulation(weights, weights_path, run_cfg,
                                              out_prefix + "run" + std::to_string(i) + "_",
                                              quiet);
            status = std::max(status, rc);
        }
        return status;
    }
    return run_one_simulation(weights, weights_path, cfg, out_prefix, quiet);
}

int run_one_simulation(const ModelWeights& weights, const std::string& weights_path,
                       const SimConfig& cfg, const std::string& out_prefix,
                       bool quiet) {
    Timer timer;
    if (cfg.c_init.size() != 0 && cfg.c_init.size() != weights.dims.p) {
        std::cerr << "simulate: c_init has " << cfg.c_init.size()
                  << " entries but weights have p = " << weights.dims.p << "\n";
        return exit_dim_mismatch;
    }
    GmmPrior prior = GmmPrior::one_hot(weights.dims.p);
    TrajectoryRecord rec = run_simulation(weights, cfg, prior);
    rec.weights_hash = file_hash(weights_path);

    const std::string traj_path = out_prefix + "trajectory.csv";
    const std::string meta_path = out_prefix + "meta.json";
    ensure_parent_dir(traj_path);
    write_trajectory_csv(rec, traj_path);

    json meta;
    meta["format_version"] = 1;
    meta["config"] = sim_config_to_json(cfg);
    meta["weights_hash"] = rec.weights_hash;
    meta["seed"] = cfg.seed;
    meta["p"] = rec.p;
    meta["m"] = rec.m;
    meta["rows"] = rec.t.size();
    meta["diverged"] = rec.diverged;
    if (rec.diverged)
        meta["divergence_step"] = rec.divergence_step;
    {
        std::ofstream out(meta_path);
        out << meta.dump(1) << "\n";
    }

    RunManifest manifest;
    manifest.command = "simulate";
    manifest.config_echo = sim_config_to_json(cfg);
    manifest.seed = cfg.seed;
    manifest.weights_path = weights_path;
    manifest.weights_hash = rec.weights_hash;
    manifest.outputs = {traj_path, meta_path};
    if (cfg.record_state) {
        const std::string state_path = out_prefix + "state.csv";
        write_state_csv(rec, state_path);
        manifest.outputs.push_back(state_path);
    }
    manifest.duration_seconds = timer.seconds();
    save_manifest(manifest, out_prefix + "manifest.json");

    if (rec.diverged) {
        std::cerr << "simulate: diverged at step " << rec.divergence_step
                  << " (partial trajectory kept)\n";
        return exit_divergence;
    }
    if (!quiet)
        std::cout << "simulated " << cfg.steps << " steps -> " << traj_path << "\n";
    return exit_ok;
}

int cmd_analyze(const std::string& trajectory_path, const std::string& config_path,
                const std::string& out_prefix, bool quiet) {
    Timer timer;
    AnalysisConfig cfg;
    TrajectoryRecord rec;
    try {
        if (!config_path.empty())
            cfg = analysis_config_from_json(load_json_file(config_path));
        rec = read_trajectory_csv(trajectory_path);
    } catch (const std::exception& e) {
        std::cerr << "analyze: " << e.what() << "\n";
        return exit_config_error;
    }

    // drop the transient before labeling
    TrajectoryRecord body = rec;
    if (cfg.skip > 0 && !body.t.empty()) {
        std::size_t first = 0;
        while (first < body.t.size() && body.t[first] < cfg.skip)
            ++first;
        body.t.erase(body.t.begin(), body.t.begin() + static_cast<long>(first));
        body.x.erase(body.x.begin(), body.x.begin() + static_cast<long>(first));
        body.c.erase(body.c.begin(), body.c.begin() + static_cast<long>(first));
        body.sigma_c.erase(body.sigma_c.begin(), body.sigma_c.begin() + static_cast<long>(first));
        body.sigma_h.erase(body.sigma_h.begin(), body.sigma_h.begin() + static_cast<long>(first));
    }

    const std::string labels_path = out_prefix + "labels.csv";
    const std::string transitions_path = out_prefix + "transitions.csv";
    const std::string matrix_path = out_prefix + "matrix.json";
    ensure_parent_dir(labels_path);

    AttractorLabeling labeling;
    std::vector<Transition> transitions;
    TransitionMatrix tm;
    if (body.t.empty()) {
        labeling.p = body.p;
        labeling.theta = cfg.theta;
        labeling.dwell = cfg.dwell;
        tm = estimate_transition_matrix({}, body.p > 0 ? body.p : 1);
    } else {
        labeling = classify_attractors(body, cfg.theta, cfg.dwell);
        transitions = extract_transitions(labeling, cfg.self_transitions);
        tm = estimate_transition_matrix(transitions, body.p);
    }

    {
        std::ofstream out(labels_path);
        out << "t,label\n";
        for (std::size_t i = 0; i < labeling.t.size(); ++i)
            out << labeling.t[i] << "," << labeling.labels[i] << "\n";
    }
    {
        std::ofstream out(transitions_path);
        out << "from,to,step\n";
        for (const Transition& tr : transitions)
            out << tr.from << "," << tr.to << "," << tr.step << "\n";
    }

    const bool all_populated =
        !tm.populated.empty() &&
        std::all_of(tm.populated.begin(), tm.populated.end(), [](bool b) { return b; });

    json mj;
    mj["format_version"] = 1;
    mj["n_transitions"] = tm.n_transitions;
    mj["theta"] = cfg.theta;
    mj["dwell"] = cfg.dwell;
    mj["self_transitions"] = to_string(cfg.self_transitions);
    mj["skip"] = cfg.skip;
    mj["populated"] = tm.populated;
    json counts = json::array(), probs = json::array();
    for (Eigen::Index i = 0; i < tm.counts.rows(); ++i) {
        json crow = json::array(), prow = json::array();
        for (Eigen::Index j = 0; j < tm.counts.cols(); ++j) {
            crow.push_back(tm.counts(i, j));
            prow.push_back(tm.probabilities(i, j));
        }
        counts.push_back(crow);
        probs.push_back(prow);
    }
    mj["counts"] = counts;
    mj["probabilities"] = probs;
    if (all_populated)
        mj["independence_score"] = row_independence_score(tm);
    else
        mj["independence_score"] = nullptr;
    {
        std::ofstream out(matrix_path);
        out << mj.dump(1) << "\n";
    }

    RunManifest manifest;
    manifest.command = "analyze";
    manifest.config_echo = analysis_config_to_json(cfg);
    manifest.outputs = {labels_path, transitions_path, matrix_path};
    manifest.duration_seconds = timer.seconds();
    save_manifest(manifest, out_prefix + "manifest.json");

    if (!quiet) {
        std::cout << "transitions: " << tm.n_transitions << "\n";
        if (all_populated)
            std::cout << "row independence score: " << row_independence_score(tm)
                      << "\n";
        else
            std::cout << "row independence score: n/a (unpopulated rows)\n";
    }
    return exit_ok;
}

int cmd_gradcheck(std::uint64_t seed, int n, int d, int p, int timesteps,
                  bool inject_fault, bool quiet) {
    if (n > 16) {
        std::cerr << "gradcheck: n must be <= 16\n";
        return exit_config_error;
    }
    GradCheckOptions opts;
    opts.seed = seed;
    opts.dims = ModelDims{n, p, d, 2};
    opts.timesteps = timesteps;
    opts.inject_fault = inject_fault;
    GradCheckReport report = run_gradcheck(opts);

    if (!quiet || !report.ok()) {
        std::printf("gmm prior gradient   max rel err %.3e  (tol %.0e)\n",
                    report.gmm_grad_error, report.gmm_tolerance);
        std::printf("free-energy output   max rel err %.3e  (tol %.0e)\n",
                    report.output_term_error, report.term_tolerance);
        std::printf("free-energy state    max rel err %.3e  (tol %.0e)\n",
                    report.state_term_error, report.term_tolerance);
        std::printf("bptt open_loop       max rel err %.3e  (tol %.0e)\n",
                    report.bptt_open_error, report.bptt_tolerance);
        std::printf("bptt pc_detached     max rel err %.3e  (tol %.0e)\n",
                    report.bptt_detached_error, report.bptt_tolerance);
    }
    if (!report.ok()) {
        std::cerr << "gradcheck: tolerance violated: " << report.worst_name() << "\n";
        return exit_tolerance;
    }
    return exit_ok;
}

int cmd_landscape(double sigma_c, double lo, double hi, int resolution,
                  const std::string& prior_config, int axis0, int axis1,
                  const std::string& out_path, bool quiet) {
    Timer timer;
    GmmPrior prior;
    int p = 2;
    try {
        if (!prior_config.empty()) {
            json j = load_json_file(prior_config);
            p = j.at("p").get<int>();
            prior = GmmPrior::one_hot(p);
            if (j.contains("weights")) {
                const auto weights = j.at("weights").get<std::vector<double>>();
                if (static_cast<int>(weights.size()) != p)
                    throw std::invalid_argument("prior weights must have p entries");
                for (int i = 0; i < p; ++i)
                    prior.weights[i] = weights[static_cast<std::size_t>(i)];
            }
            prior.validate();
        } else {
            prior = GmmPrior::one_hot(p);
        }
    } catch (const std::exception& e) {
        std::cerr << "landscape: config error: " << e.what() << "\n";
        return exit_config_error;
    }

    LandscapeGrid grid;
    try {
        grid = gmm_landscape(prior, sigma_c, lo, hi, resolution, axis0, axis1);
    } catch (const std::exception& e) {
        std::cerr << "landscape: " << e.what() << "\n";
        return exit_config_error;
    }
    ensure_parent_dir(out_path);
    write_landscape_csv(grid, out_path);

    RunManifest manifest;
    manifest.command = "landscape";
    manifest.config_echo = {{"sigma_c", sigma_c}, {"lo", lo},   {"hi", hi},
                            {"resolution", resolution}, {"p", p}, {"axis0", axis0},
                            {"axis1", axis1}};
    manifest.outputs = {out_path};
    manifest.duration_seconds = timer.seconds();
    save_manifest(manifest, out_path + ".manifest.json");

    if (!quiet)
        std::cout << "landscape " << resolution << "x" << resolution << " -> "
                  << out_path << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"predictive-coding RNN: attractor training, closed-loop "
                 "simulation, transition analysis"};
    app.require_subcommand(1);
    app.fallthrough();  // --seed / --quiet may follow the subcommand

    std::optional<std::uint64_t> seed;
    std::string config_path, out_prefix;
    bool quiet = false;
    app.add_option("--seed", seed, "override the config seed")->group("Global");
    app.add_flag("--quiet", quiet, "suppress progress output")->group("Global");

    auto* train_cmd = app.add_subcommand("train", "train attractor weights (BPTT + Adam)");
    std::string train_config, train_out = "out/train_";
    train_cmd->add_option("--config", train_config, "training config JSON")->required();
    train_cmd->add_option("--out", train_out, "output prefix");

    auto* sim_cmd = app.add_subcommand("simulate", "closed-loop noise-driven run");
    std::string sim_weights, sim_config, sim_out = "out/sim_";
    int sim_sweep = 1;
    sim_cmd->add_option("--weights", sim_weights, "trained weights JSON")->required();
    sim_cmd->add_option("--config", sim_config, "simulation config JSON")->required();
    sim_cmd->add_option("--out", sim_out, "output prefix");
    sim_cmd->add_option("--sweep", sim_sweep, "run N replicas with derived seeds");

    auto* an_cmd = app.add_subcommand("analyze", "label attractors, estimate transition matrix");
    std::string an_traj, an_config, an_out = "out/analysis_";
    an_cmd->add_option("--trajectory", an_traj, "trajectory CSV")->required();
    an_cmd->add_option("--config", an_config, "analysis config JSON");
    an_cmd->add_option("--out", an_out, "output prefix");

    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    std::uint64_t gc_seed = 1;
    int gc_n = 6, gc_d = 3, gc_p = 2, gc_T = 20;
    bool gc_fault = false;
    gc_cmd->add_option("--n", gc_n, "hidden state size (<= 16)");
    gc_cmd->add_option("--d", gc_d, "factor size");
    gc_cmd->add_option("--p", gc_p, "causes size");
    gc_cmd->add_option("--timesteps", gc_T, "rollout length");
    gc_cmd->add_flag("--inject-fault", gc_fault, "perturb one gradient (self-test)")
        ->group("");

    auto* land_cmd = app.add_subcommand("landscape", "export GMM prior density grid");
    double land_sigma = 0.4, land_lo = -0.5, land_hi = 1.5;
    int land_res = 201, land_a0 = 0, land_a1 = 1;
    std::string land_prior, land_out = "out/landscape.csv";
    land_cmd->add_option("--sigma-c", land_sigma, "component std-dev")->required();
    land_cmd->add_option("--lo", land_lo, "lower grid bound");
    land_cmd->add_option("--hi", land_hi, "upper grid bound");
    land_cmd->add_option("--resolution", land_res, "grid points per axis");
    land_cmd->add_option("--prior-config", land_prior, "prior config JSON ({p, weights?})");
    land_cmd->add_option("--axis0", land_a0, "first slice axis (p > 2)");
    land_cmd->add_option("--axis1", land_a1, "second slice axis (p > 2)");
    land_cmd->add_option("--out", land_out, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed())
            return cmd_train(train_config, train_out, seed, quiet);
        if (sim_cmd->parsed())
            return cmd_simulate(sim_weights, sim_config, sim_out, seed, sim_sweep, quiet);
        if (an_cmd->parsed())
            return cmd_analyze(an_traj, an_config, an_out, quiet);
        if (gc_cmd->parsed())
            return cmd_gradcheck(seed.value_or(gc_seed), gc_n, gc_d, gc_p, gc_T,
                                 gc_fault, quiet);
        if (land_cmd->parsed())
            return cmd_landscape(land_sigma, land_lo, land_hi, land_res, land_prior,
                                 land_a0, land_a1, land_out, quiet);
    } catch (const pcrnn::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_divergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config_error;
    }
    return exit_ok;
}
