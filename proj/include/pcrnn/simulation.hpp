#pragma once

#include "pcrnn/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pcrnn {

enum class ScheduleKind { constant, sinexp, piecewise };

ScheduleKind schedule_kind_from_string(const std::string& name);
std::string to_string(ScheduleKind kind);

// Time-varying noise level.
//   constant:  value = a
//   sinexp:    value = a * exp(b * sin(t / s))
//   piecewise: alternates a (for s steps) and b (for s2 steps, s2 = s when 0)
struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::constant;
    double a = 1.0;
    double b = 0.0;
    double s = 1.0;
    double s2 = 0.0;

    void validate() const;
};

double evaluate_schedule(const NoiseSchedule& sched, long t);

enum class SimMode { A, B, C };

SimMode sim_mode_from_string(const std::string& name);
std::string to_string(SimMode mode);

// Closed-loop run configuration. Mode A oscillates sigma_c with sigma_h
// constant; mode B the reverse; mode C plateaus sigma_c at a very large
// value so the causes random-walk between dwell phases.
struct SimConfig {
    SimMode mode = SimMode::A;
    long steps = 20000;
    std::uint64_t seed = 0;
    double noise_amplitude = 1.0;  // std-dev of the injected output error
    double sigma_x = 10.0;
    double tau = 5.0;
    double cause_rate = 1.0;
    double cause_step_limit = std::numeric_limits<double>::infinity();
    NoiseSchedule schedule_c;
    NoiseSchedule schedule_h;
    Vec c_init;                    // empty selects one-hot(0)
    long record_stride = 1;
    bool record_state = false;

    void validate() const;
};

// Per-step log of a simulation. On divergence the record holds everything
// up to the offending step and is flagged rather than discarded.
struct TrajectoryRecord {
    int m = 0;
    int p = 0;
    std::vector<long> t;
    std::vector<Vec> x;
    std::vector<Vec> c;
    std::vector<double> sigma_c;
    std::vector<double> sigma_h;
    std::vector<Vec> h_post;  // only when record_state

    SimConfig config;
    std::string weights_hash;

    bool diverged = false;
    long divergence_step = -1;
};

TrajectoryRecord run_simulation(const ModelWeights& w, const SimConfig& cfg,
                                const GmmPrior& prior);

// Windowed summaries of the hidden state: mean ||h_post|| and mean step
// displacement ||h_post(t) - h_post(t-1)||. Window 0 selects one schedule
// period; the first `skip` steps are excluded.
struct StateStats {
    std::vector<long> window_start;
    std::vector<double> mean_norm;
    std::vector<double> mean_velocity;
};

StateStats state_statistics(const TrajectoryRecord& rec, long window = 0,
                            long skip = 500);

// CSV and metadata I/O. Header: t,x0,x1,c0,...,c{p-1},sigma_c,sigma_h.
// Reals are written with %.17g so values survive a round trip unchanged.
void write_trajectory_csv(const TrajectoryRecord& rec, const std::string& path);
void write_state_csv(const TrajectoryRecord& rec, const std::string& path);
TrajectoryRecord read_trajectory_csv(const std::string& path);

}  // namespace pcrnn
