#include "pcrnn/simulation.hpp"

#include "pcrnn/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pcrnn {

ScheduleKind schedule_kind_from_string(const std::string& name) {
    if (name == "constant") return ScheduleKind::constant;
    if (name == "sinexp") return ScheduleKind::sinexp;
    if (name == "piecewise") return ScheduleKind::piecewise;
    throw std::invalid_argument("unknown schedule kind: " + name);
}

std::string to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::constant: return "constant";
        case ScheduleKind::sinexp: return "sinexp";
        case ScheduleKind::piecewise: return "piecewise";
    }
    throw std::invalid_argument("unknown schedule kind enum value");
}

void NoiseSchedule::validate() const {
    if (!(a > 0.0) || !std::isfinite(a))
        throw std::invalid_argument("schedule base value must be positive and finite");
    switch (kind) {
        case ScheduleKind::constant:
            break;
        case ScheduleKind::sinexp:
            if (!(s > 0.0))
                throw std::invalid_argument("sinexp timescale must be > 0");
            if (!std::isfinite(a * std::exp(std::abs(b))))
                throw std::invalid_argument("sinexp schedule overflows");
            break;
        case ScheduleKind::piecewise:
            if (!(b > 0.0) || !std::isfinite(b))
                throw std::invalid_argument("piecewise plateau value must be positive and finite");
            if (!(s >= 1.0) || (s2 != 0.0 && !(s2 >= 1.0)))
                throw std::invalid_argument("piecewise durations must be >= 1 step");
            break;
    }
}

double evaluate_schedule(const NoiseSchedule& sched, long t) {
    if (t < 0)
        throw std::invalid_argument("schedule time must be >= 0");
    double value = 0.0;
    switch (sched.kind) {
        case ScheduleKind::constant:
            value = sched.a;
            break;
        case ScheduleKind::sinexp:
            value = sched.a * std::exp(sched.b * std::sin(static_cast<double>(t) / sched.s));
            break;
        case ScheduleKind::piecewise: {
            const double dwell = sched.s;
            const double plateau = sched.s2 > 0.0 ? sched.s2 : sched.s;
            const double phase = std::fmod(static_cast<double>(t), dwell + plateau);
            value = phase < dwell ? sched.a : sched.b;
            break;
        }
    }
    if (!(value > 0.0) || !std::isfinite(value))
        throw std::invalid_argument("schedule produced a non-positive value");
    return value;
}

SimMode sim_mode_from_string(const std::string& name) {
    if (name == "A") return SimMode::A;
    if (name == "B") return SimMode::B;
    if (name == "C") return SimMode::C;
    throw std::invalid_argument("unknown simulation mode: " + name);
}

std::string to_string(SimMode mode) {
    switch (mode) {
        case SimMode::A: return "A";
        case SimMode::B: return "B";
        case SimMode::C: return "C";
    }
    throw std::invalid_argument("unknown simulation mode enum value");
}

void SimConfig::validate() const {
    if (steps < 0)
        throw std::invalid_argument("steps must be >= 0");
    if (!(noise_amplitude >= 0.0))
        throw std::invalid_argument("noise_amplitude must be >= 0");
    if (!(sigma_x > 0.0))
        throw std::invalid_argument("sigma_x must be > 0");
    if (!(tau >= 1.0))
        throw std::invalid_argument("tau must be >= 1");
    if (!(cause_rate > 0.0) || !(cause_step_limit > 0.0))
        throw std::invalid_argument("cause_rate and cause_step_limit must be > 0");
    if (record_stride < 1)
        throw std::invalid_argument("record_stride must be >= 1");
    schedule_c.validate();
    schedule_h.validate();
    switch (mode) {
        case SimMode::A:
            if (schedule_h.kind != ScheduleKind::constant)
                throw std::invalid_argument("mode A requires a constant sigma_h schedule");
            break;
        case SimMode::B:
            if (schedule_c.kind != ScheduleKind::constant)
                throw std::invalid_argument("mode B requires a constant sigma_c schedule");
            break;
        case SimMode::C:
            if (schedule_c.kind != ScheduleKind::piecewise)
                throw std::invalid_argument("mode C requires a piecewise sigma_c schedule");
            break;
    }
}

TrajectoryRecord run_simulation(const ModelWeights& w, const SimConfig& cfg,
                                const GmmPrior& prior) {
    w.validate();
    cfg.validate();
    prior.validate();
    if (cfg.c_init.size() != 0 && cfg.c_init.size() != w.dims.p)
        throw std::invalid_argument("c_init dimension does not match weights");
    if (prior.means.rows() != w.dims.p)
        throw std::invalid_argument("prior dimension does not match weights");

    Vec c0 = cfg.c_init.size() != 0 ? cfg.c_init : one_hot(w.dims.p, 0);

    Precisions prec;
    prec.sigma_x = cfg.sigma_x;
    prec.tau = cfg.tau;
    prec.cause_rate = cfg.cause_rate;
    prec.cause_step_limit = cfg.cause_step_limit;

    TrajectoryRecord rec;
    rec.m = w.dims.m;
    rec.p = w.dims.p;
    rec.config = cfg;
    const auto expected =
        static_cast<std::size_t>(cfg.steps / cfg.record_stride + 1);
    rec.t.reserve(expected);
    rec.x.reserve(expected);
    rec.c.reserve(expected);
    rec.sigma_c.reserve(expected);
    rec.sigma_h.reserve(expected);
    if (cfg.record_state)
        rec.h_post.reserve(expected);

    NetworkState state = NetworkState::initial(w, c0);
    Rng rng = Rng::substream(cfg.seed, 0);
    Vec noise(w.dims.m);

    for (long t = 0; t < cfg.steps; ++t) {
        prec.sigma_c = evaluate_schedule(cfg.schedule_c, t);
        prec.sigma_h = evaluate_schedule(cfg.schedule_h, t);
        for (int i = 0; i < w.dims.m; ++i)
            noise[i] = cfg.noise_amplitude * rng.normal();

        bool ok = true;
        try {
            state = step_closed_loop(state, noise, w, prec, prior);
        } catch (const std::exception&) {
            ok = false;
        }
        if (!ok || !state.all_finite()) {
            rec.diverged = true;
            rec.divergence_step = t;
            break;
        }

        if (t % cfg.record_stride == 0) {
            rec.t.push_back(t);
            rec.x.push_back(state.x);
            rec.c.push_back(state.c);
            rec.sigma_c.push_back(prec.sigma_c);
            rec.sigma_h.push_back(prec.sigma_h);
            if (cfg.record_state)
                rec.h_post.push_back(state.h_post);
        }
    }
    return rec;
}

namespace {

long default_window(const SimConfig& cfg) {
    const NoiseSchedule& varying =
        cfg.schedule_c.kind != ScheduleKind::constant ? cfg.schedule_c : cfg.schedule_h;
    switch (varying.kind) {
        case ScheduleKind::sinexp:
            return std::lround(2.0 * 3.14159265358979323846 * varying.s);
        case ScheduleKind::piecewise:
            return std::lround(varying.s + (varying.s2 > 0.0 ? varying.s2 : varying.s));
        case ScheduleKind::constant:
            break;
    }
    return 60;
}

}  // namespace

StateStats state_statistics(const TrajectoryRecord& rec, long window, long skip) {
    if (rec.h_post.empty())
        throw std::invalid_argument("state_statistics: record has no hidden state");
    if (window <= 0)
        window = default_window(rec.config);

    std::size_t begin = 0;
    while (begin < rec.t.size() && rec.t[begin] < skip)
        ++begin;
    const auto count = static_cast<long>(rec.t.size() - begin);
    if (count < 1 || window > rec.t.back() - rec.t[begin] + 1)
        throw std::invalid_argument("state_statistics: window longer than record");

    StateStats stats;
    std::size_t i = begin;
    while (i < rec.t.size()) {
        const long w_start = rec.t[i];
        double norm_sum = 0.0, vel_sum = 0.0;
        long norm_n = 0, vel_n = 0;
        while (i < rec.t.size() && rec.t[i] < w_start + window) {
            norm_sum += rec.h_post[i].norm();
            ++norm_n;
            if (i > begin) {
                vel_sum += (rec.h_post[i] - rec.h_post[i - 1]).norm();
                ++vel_n;
            }
            ++i;
        }
        stats.window_start.push_back(w_start);
        stats.mean_norm.push_back(norm_sum / static_cast<double>(norm_n));
        stats.mean_velocity.push_back(
            vel_n > 0 ? vel_sum / static_cast<double>(vel_n) : 0.0);
    }
    return stats;
}

namespace {

void append_real(std::string& line, double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    line += buf;
}

}  // namespace

void write_trajectory_csv(const TrajectoryRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    const int p = rec.p;
    const int m = rec.m;
    std::string header = "t";
    for (int i = 0; i < m; ++i)
        header += ",x" + std::to_string(i);
    for (int i = 0; i < p; ++i)
        header += ",c" + std::to_string(i);
    out << header << ",sigma_c,sigma_h\n";

    std::string line;
    for (std::size_t row = 0; row < rec.t.size(); ++row) {
        line.clear();
        line += std::to_string(rec.t[row]);
        for (int i = 0; i < m; ++i) {
            line += ',';
            append_real(line, rec.x[row][i]);
        }
        for (int i = 0; i < p; ++i) {
            line += ',';
            append_real(line, rec.c[row][i]);
        }
        line += ',';
        append_real(line, rec.sigma_c[row]);
        line += ',';
        append_real(line, rec.sigma_h[row]);
        out << line << "\n";
    }
    if (!out)
        throw std::runtime_error("failed writing " + path);
}

void write_state_csv(const TrajectoryRecord& rec, const std::string& path) {
    if (rec.h_post.empty() && !rec.t.empty())
        throw std::invalid_argument("record has no hidden state to write");
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    const auto n = rec.h_post.empty() ? 0 : static_cast<int>(rec.h_post[0].size());
    out << "t";
    for (int i = 0; i < n; ++i)
        out << ",h" << i;
    out << "\n";
    std::string line;
    for (std::size_t row = 0; row < rec.h_post.size(); ++row) {
        line.clear();
        line += std::to_string(rec.t[row]);
        for (int i = 0; i < n; ++i) {
            line += ',';
            append_real(line, rec.h_post[row][i]);
        }
        out << line << "\n";
    }
}

TrajectoryRecord read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::string header;
    if (!std::getline(in, header))
        throw std::invalid_argument(path + ": empty trajectory file");

    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string col;
        while (std::getline(ss, col, ','))
            cols.push_back(col);
    }
    int m = 0, p = 0;
    std::size_t at = 0;
    if (cols.empty() || cols[at++] != "t")
        throw std::invalid_argument(path + ": schema mismatch, expected leading t column");
    while (at < cols.size() && cols[at] == "x" + std::to_string(m)) {
        ++m;
        ++at;
    }
    while (at < cols.size() && cols[at] == "c" + std::to_string(p)) {
        ++p;
        ++at;
    }
    if (m < 1 || p < 1 || at + 2 != cols.size() || cols[at] != "sigma_c" ||
        cols[at + 1] != "sigma_h")
        throw std::invalid_argument(path + ": schema mismatch in trajectory header");

    TrajectoryRecord rec;
    rec.m = m;
    rec.p = p;
    std::string line;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<double> values;
        while (std::getline(ss, field, ','))
            values.push_back(std::stod(field));
        if (values.size() != cols.size())
            throw std::invalid_argument(path + ": wrong field count on line " +
                                        std::to_string(line_no));
        std::size_t k = 0;
        rec.t.push_back(static_cast<long>(values[k++]));
        Vec x(m), c(p);
        for (int i = 0; i < m; ++i)
            x[i] = values[k++];
        for (int i = 0; i < p; ++i)
            c[i] = values[k++];
        rec.x.push_back(std::move(x));
        rec.c.push_back(std::move(c));
        rec.sigma_c.push_back(values[k++]);
        rec.sigma_h.push_back(values[k++]);
    }
    return rec;
}

}  // namespace pcrnn
