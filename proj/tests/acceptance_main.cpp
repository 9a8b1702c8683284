// End-to-end acceptance suite. Each numbered criterion runs against the
// shipped configs and prints one PASS/FAIL line; the process exits nonzero
// if any criterion fails. The paper-scale model is trained once and reused
// by the simulation criteria.

#include "pcrnn/analysis.hpp"
#include "pcrnn/config_io.hpp"
#include "pcrnn/gradcheck.hpp"
#include "pcrnn/simulation.hpp"
#include "pcrnn/targets.hpp"
#include "pcrnn/training.hpp"
#include "pcrnn/weights_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace pcrnn;

namespace {

struct Outcome {
    int id;
    bool pass;
    std::string detail;
    double seconds;
    bool informational = false;
};

std::vector<Outcome> outcomes;

template <typename F>
void criterion(int id, const char* name, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome{id, false, "", 0.0};
    try {
        outcome = body();
        outcome.id = id;
    } catch (const std::exception& e) {
        outcome.pass = false;
        outcome.detail = std::string("exception: ") + e.what();
    }
    outcome.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (id <= 7)
        std::printf("[%s] criterion %d: %s — %s (%.1f s)\n",
                    outcome.pass ? "PASS" : "FAIL", id, name, outcome.detail.c_str(),
                    outcome.seconds);
    else if (outcome.informational)
        std::printf("[info] %s — %s (%.1f s)\n", name, outcome.detail.c_str(),
                    outcome.seconds);
    else
        std::printf("[%s] %s — %s (%.1f s)\n", outcome.pass ? "PASS" : "FAIL", name,
                    outcome.detail.c_str(), outcome.seconds);
    std::fflush(stdout);
    outcomes.push_back(outcome);
}

double per_step_rms(const std::vector<Vec>& pred, const std::vector<Vec>& target,
                    std::size_t begin, std::size_t end) {
    double sum = 0.0;
    long count = 0;
    for (std::size_t t = begin; t < end; ++t) {
        sum += (pred[t] - target[t]).squaredNorm();
        count += static_cast<long>(pred[t].size());
    }
    return std::sqrt(sum / static_cast<double>(count));
}

// pool transitions from derived-seed replicas until `needed` pairs exist
std::vector<Transition> pooled_transitions(const ModelWeights& weights,
                                           SimConfig cfg, const AnalysisConfig& an,
                                           long needed, int max_runs,
                                           int* runs_used = nullptr) {
    GmmPrior prior = GmmPrior::one_hot(weights.dims.p);
    const std::uint64_t base_seed = cfg.seed;
    std::vector<Transition> pool;
    int run = 0;
    for (; run < max_runs && static_cast<long>(pool.size()) < needed; ++run) {
        cfg.seed = base_seed + static_cast<std::uint64_t>(run);  // seed + run index
        TrajectoryRecord rec = run_simulation(weights, cfg, prior);
        if (rec.diverged)
            throw std::runtime_error("simulation diverged at step " +
                                     std::to_string(rec.divergence_step));
        // drop the transient
        TrajectoryRecord body = rec;
        std::size_t first = 0;
        while (first < body.t.size() && body.t[first] < an.skip)
            ++first;
        body.t.erase(body.t.begin(), body.t.begin() + static_cast<long>(first));
        body.c.erase(body.c.begin(), body.c.begin() + static_cast<long>(first));
        AttractorLabeling lab = classify_attractors(body, an.theta, an.dwell);
        auto pairs = extract_transitions(lab, an.self_transitions);
        pool.insert(pool.end(), pairs.begin(), pairs.end());
    }
    if (runs_used != nullptr)
        *runs_used = run;
    return pool;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    std::string configs = "configs";
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--configs")
            configs = argv[i + 1];

    const auto work = std::filesystem::temp_directory_path() / "pcrnn_acceptance";
    std::filesystem::create_directories(work);

    // ---- criterion 1: gradient oracles --------------------------------
    criterion(1, "gradient oracles vs finite differences", [&] {
        double worst_gmm = 0.0, worst_bptt = 0.0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            GradCheckOptions opts;
            opts.seed = seed;
            opts.dims = ModelDims{6, 2, 3, 2};
            opts.timesteps = 20;
            opts.gmm_points = seed == 1 ? 100 : 10;
            GradCheckReport rep = run_gradcheck(opts);
            worst_gmm = std::max(worst_gmm, rep.gmm_grad_error);
            worst_bptt = std::max({worst_bptt, rep.bptt_open_error,
                                   rep.bptt_detached_error});
        }
        Outcome o;
        o.pass = worst_gmm < 1e-5 && worst_bptt < 1e-4;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "gmm %.2e (<1e-5), bptt %.2e (<1e-4)",
                      worst_gmm, worst_bptt);
        o.detail = buf;
        return o;
    });

    // ---- criterion 2: training reproduction at paper scale ------------
    TrainRun paper = train_run_from_json(load_json_file(configs + "/paper.json"));
    TrainResult trained;
    criterion(2, "paper-scale training and open-loop tracking", [&] {
        trained = train(paper.config, paper.specs);
        const double first = trained.loss_curve.front();
        const double last = trained.loss_curve.back();
        const bool loss_ok = first / last >= 100.0;

        GmmPrior prior = GmmPrior::one_hot(paper.config.dims.p);
        double worst_rms = 0.0;
        for (int k = 0; k < paper.config.dims.p; ++k) {
            // evaluate against the full-length trajectory regardless of the
            // training window
            TargetSpec eval_spec = paper.specs[static_cast<std::size_t>(k)];
            eval_spec.length = std::max(eval_spec.length, 1000);
            auto targets = generate_targets(eval_spec);
            auto pred = unroll(trained.weights, trained.weights.h_init,
                               one_hot(paper.config.dims.p, k),
                               static_cast<int>(targets.size()),
                               paper.config.precisions, prior, RolloutMode::open_loop);
            const std::size_t T = targets.size();
            const std::size_t five_periods =
                static_cast<std::size_t>(5 * paper.specs[0].period);
            worst_rms = std::max(
                worst_rms, per_step_rms(pred, targets, T - five_periods, T));
        }
        const double amplitude = paper.specs[0].amplitude;
        Outcome o;
        o.pass = loss_ok && worst_rms <= 0.1 * amplitude;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "loss %.3g -> %.3g (%.0fx), tracking rms %.3f (<=%.2f)",
                      first, last, first / last, worst_rms, 0.1 * amplitude);
        o.detail = buf;
        return o;
    });
    save_weights(trained.weights, (work / "weights.json").string());

    AnalysisConfig an = analysis_config_from_json(load_json_file(configs + "/analysis.json"));

    // ---- criterion 3: mode A ------------------------------------------
    criterion(3, "mode A visits all attractors, near-independent rows", [&] {
        SimConfig cfg = sim_config_from_json(load_json_file(configs + "/modeA.json"));
        GmmPrior prior = GmmPrior::one_hot(3);
        TrajectoryRecord first_run = run_simulation(trained.weights, cfg, prior);
        if (first_run.diverged)
            throw std::runtime_error("mode A diverged");
        AttractorLabeling lab = classify_attractors(first_run, an.theta, an.dwell);
        bool seen[3] = {false, false, false};
        for (int label : lab.labels)
            if (label >= 0)
                seen[label] = true;
        const bool all_three = seen[0] && seen[1] && seen[2];

        int runs = 0;
        auto pool = pooled_transitions(trained.weights, cfg, an, 2000, 200, &runs);
        TransitionMatrix tm = estimate_transition_matrix(pool, 3);
        const double score = row_independence_score(tm);
        Outcome o;
        o.pass = all_three && static_cast<long>(pool.size()) >= 2000 && score <= 0.15;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "labels %s, %zu transitions over %d runs, independence %.3f (<=0.15)",
                      all_three ? "{0,1,2}" : "incomplete", pool.size(), runs, score);
        o.detail = buf;
        return o;
    });

    // ---- criterion 4: mode B ------------------------------------------
    criterion(4, "mode B switching is past-dependent", [&] {
        SimConfig cfg = sim_config_from_json(load_json_file(configs + "/modeB.json"));
        int runs = 0;
        auto pool = pooled_transitions(trained.weights, cfg, an, 2000, 200, &runs);
        TransitionMatrix tm = estimate_transition_matrix(pool, 3);
        const double score = row_independence_score(tm);
        // shapes are ordered circle, square, triangle in the paper config
        const double circle_to_triangle = tm.probabilities(0, 2);
        Outcome o;
        o.pass = static_cast<long>(pool.size()) >= 2000 && score >= 0.10 &&
                 circle_to_triangle >= 0.10 && circle_to_triangle <= 0.40;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "%zu transitions over %d runs, independence %.3f (>=0.10), "
                      "P(circle->triangle) %.3f (in [0.10,0.40])",
                      pool.size(), runs, score, circle_to_triangle);
        o.detail = buf;
        return o;
    });

    // ---- criterion 5: GMM landscape modality ---------------------------
    criterion(5, "prior landscape bimodal/unimodal structure", [&] {
        GmmPrior prior = GmmPrior::one_hot(2);
        auto maxima_of = [&](double sigma) {
            LandscapeGrid grid = gmm_landscape(prior, sigma, -0.5, 1.5, 201);
            std::vector<std::pair<int, int>> maxima;
            for (int i = 0; i < grid.resolution; ++i)
                for (int j = 0; j < grid.resolution; ++j) {
                    bool is_max = true;
                    for (int di = -1; di <= 1 && is_max; ++di)
                        for (int dj = -1; dj <= 1 && is_max; ++dj) {
                            if (di == 0 && dj == 0)
                                continue;
                            int ni = i + di, nj = j + dj;
                            if (ni < 0 || nj < 0 || ni >= grid.resolution ||
                                nj >= grid.resolution)
                                continue;
                            if (grid.density(ni, nj) >= grid.density(i, j))
                                is_max = false;
                        }
                    if (is_max)
                        maxima.push_back({i, j});
                }
            return std::make_pair(grid, maxima);
        };

        auto [g4, m4] = maxima_of(0.4);
        auto [g8, m8] = maxima_of(0.8);
        auto [g6, m6] = maxima_of(0.6);
        const double cell = (g4.hi - g4.lo) / (g4.resolution - 1);
        bool peaks_at_means = m4.size() == 2;
        for (auto [i, j] : m4) {
            const double x = g4.coordinate(i), y = g4.coordinate(j);
            peaks_at_means =
                peaks_at_means && ((std::abs(x - 1.0) <= cell && std::abs(y) <= cell) ||
                                   (std::abs(x) <= cell && std::abs(y - 1.0) <= cell));
        }
        bool midpoint_peak =
            m8.size() == 1 && std::abs(g8.coordinate(m8[0].first) - 0.5) <= cell &&
            std::abs(g8.coordinate(m8[0].second) - 0.5) <= cell;
        Outcome o;
        o.pass = peaks_at_means && midpoint_peak && m6.size() == 2;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "maxima: sigma 0.4 -> %zu, 0.6 -> %zu, 0.8 -> %zu",
                      m4.size(), m6.size(), m8.size());
        o.detail = buf;
        return o;
    });

    // ---- criterion 6: bit-identical repeated simulation ----------------
    criterion(6, "repeated simulate is byte-identical", [&] {
        SimConfig cfg = sim_config_from_json(load_json_file(configs + "/modeA.json"));
        cfg.steps = 20000;
        GmmPrior prior = GmmPrior::one_hot(3);
        TrajectoryRecord r1 = run_simulation(trained.weights, cfg, prior);
        TrajectoryRecord r2 = run_simulation(trained.weights, cfg, prior);
        const std::string p1 = (work / "det1.csv").string();
        const std::string p2 = (work / "det2.csv").string();
        write_trajectory_csv(r1, p1);
        write_trajectory_csv(r2, p2);
        const bool identical = read_file(p1) == read_file(p2) && !read_file(p1).empty();
        Outcome o;
        o.pass = identical;
        o.detail = identical ? "trajectory files match byte for byte"
                             : "trajectory files differ";
        return o;
    });

    // ---- criterion 7: pinned-attractor stability at zero noise ---------
    criterion(7, "pinned attractor stays on its cycle for 50 periods", [&] {
        SimConfig base = sim_config_from_json(load_json_file(configs + "/pinned.json"));
        GmmPrior prior = GmmPrior::one_hot(3);
        const int period = paper.specs[0].period;
        const long settle = 500;
        base.steps = settle + 51L * period;
        double worst = 0.0;
        for (int k = 0; k < 3; ++k) {
            SimConfig cfg = base;
            cfg.c_init = one_hot(3, k);
            TrajectoryRecord rec = run_simulation(trained.weights, cfg, prior);
            if (rec.diverged)
                throw std::runtime_error("pinned run diverged");
            // reference cycle: first period after the transient
            std::vector<Vec> ref(rec.x.begin() + settle, rec.x.begin() + settle + period);
            for (int lap = 1; lap <= 50; ++lap) {
                double sum = 0.0;
                for (int i = 0; i < period; ++i)
                    sum += (rec.x[static_cast<std::size_t>(settle + lap * period + i)] -
                            ref[static_cast<std::size_t>(i)])
                               .squaredNorm();
                worst = std::max(worst, std::sqrt(sum / (2.0 * period)));
            }
        }
        const double amplitude = paper.specs[0].amplitude;
        Outcome o;
        o.pass = worst <= 0.1 * amplitude;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "worst per-period rms drift %.4f (<=%.2f)",
                      worst, 0.1 * amplitude);
        o.detail = buf;
        return o;
    });

    // ---- supplementary checks on the trained model ----------------------
    criterion(8, "extra: posterior correction shrinks the re-predicted error", [&] {
        GmmPrior prior = GmmPrior::one_hot(3);
        const Precisions& prec = paper.config.precisions;
        bool ok = true;
        double before0 = 0.0, after0 = 0.0;
        for (int k = 0; k < 3 && ok; ++k) {
            auto targets = generate_targets(paper.specs[static_cast<std::size_t>(k)]);
            NetworkState state = NetworkState::initial(trained.weights, one_hot(3, k));
            NetworkState next = step_open_loop(state, targets[0], trained.weights, prec, prior);
            before0 = (predict_output(next.h, trained.weights) - targets[0]).norm();
            after0 = (predict_output(next.h_post, trained.weights) - targets[0]).norm();
            ok = after0 < before0;
        }
        Outcome o;
        o.pass = ok;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "first-step error %.4f -> %.4f", before0, after0);
        o.detail = buf;
        return o;
    });

    // Reported, not gated: in the reference figures the neutral phase sits on
    // a quiescent point attractor (an emergent property of that trained
    // instance, not enforced by training); this model erases memory through a
    // fast center regime instead.
    criterion(9, "neutral-phase vs cycle-phase state velocity", [&] {
        SimConfig cfg = sim_config_from_json(load_json_file(configs + "/modeA.json"));
        cfg.steps = 20000;
        cfg.record_state = true;
        GmmPrior prior = GmmPrior::one_hot(3);
        TrajectoryRecord rec = run_simulation(trained.weights, cfg, prior);
        if (rec.diverged)
            throw std::runtime_error("mode A diverged");
        StateStats stats = state_statistics(rec, 100, 500);
        AttractorLabeling lab = classify_attractors(rec, an.theta, an.dwell);

        // group windows by majority label
        double neutral_sum = 0.0, cycle_sum = 0.0;
        long neutral_n = 0, cycle_n = 0;
        bool finite = true;
        for (std::size_t wi = 0; wi < stats.window_start.size(); ++wi) {
            const long begin = stats.window_start[wi];
            long in_window = 0, neutral = 0;
            for (std::size_t i = 0; i < lab.t.size(); ++i)
                if (lab.t[i] >= begin && lab.t[i] < begin + 100) {
                    ++in_window;
                    if (lab.labels[i] == neutral_label)
                        ++neutral;
                }
            if (in_window == 0)
                continue;
            finite = finite && std::isfinite(stats.mean_velocity[wi]) &&
                     stats.mean_velocity[wi] >= 0.0;
            if (2 * neutral > in_window) {
                neutral_sum += stats.mean_velocity[wi];
                ++neutral_n;
            } else if (neutral == 0) {
                cycle_sum += stats.mean_velocity[wi];
                ++cycle_n;
            }
        }
        const double neutral_mean = neutral_sum / std::max(1L, neutral_n);
        const double cycle_mean = cycle_sum / std::max(1L, cycle_n);
        Outcome o;
        o.pass = finite && neutral_n > 0 && cycle_n > 0;
        o.informational = true;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "mean velocity %.3f (neutral) vs %.3f (cycle)",
                      neutral_mean, cycle_mean);
        o.detail = buf;
        return o;
    });

    int failures = 0;
    for (const Outcome& o : outcomes)
        failures += (o.pass || o.informational) ? 0 : 1;
    std::printf("%zu checks, %d failed\n", outcomes.size(), failures);
    return failures == 0 ? 0 : 1;
}
