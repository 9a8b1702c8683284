#include "pcrnn/simulation.hpp"

#include "pcrnn/rng.hpp"
#include "pcrnn/training.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace pcrnn;

namespace {

ModelWeights small_weights(std::uint64_t seed = 3) {
    return init_weights(ModelDims{6, 3, 3, 2}, seed);
}

SimConfig quiet_config(long steps = 50) {
    SimConfig cfg;
    cfg.mode = SimMode::A;
    cfg.steps = steps;
    cfg.seed = 9;
    cfg.noise_amplitude = 0.5;
    cfg.sigma_x = 10.0;
    cfg.tau = 5.0;
    cfg.cause_step_limit = 0.1;
    cfg.schedule_c = {ScheduleKind::sinexp, 0.2, 2.0, 100.0, 0.0};
    cfg.schedule_h = {ScheduleKind::constant, 0.1, 0.0, 1.0, 0.0};
    return cfg;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("sinexp schedule") {
    NoiseSchedule sched{ScheduleKind::sinexp, 0.2, 2.0, 100.0, 0.0};
    CHECK(evaluate_schedule(sched, 0) == doctest::Approx(0.2).epsilon(1e-15));

    double lo = 1e300, hi = 0.0;
    for (long t = 0; t < 2000; ++t) {
        const double v = evaluate_schedule(sched, t);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi == doctest::Approx(0.2 * std::exp(2.0)).epsilon(2e-3));
    CHECK(lo == doctest::Approx(0.2 * std::exp(-2.0)).epsilon(2e-3));

    // direct formula agreement on pseudo-random times
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const long t = static_cast<long>(rng.next_u64() % 100000);
        const double direct = 0.2 * std::exp(2.0 * std::sin(static_cast<double>(t) / 100.0));
        CHECK(evaluate_schedule(sched, t) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("constant and piecewise schedules") {
    NoiseSchedule constant{ScheduleKind::constant, 0.4, 0.0, 1.0, 0.0};
    for (long t : {0L, 17L, 100000L})
        CHECK(evaluate_schedule(constant, t) == 0.4);

    NoiseSchedule plateau{ScheduleKind::piecewise, 0.4, 100.0, 300.0, 200.0};
    CHECK(evaluate_schedule(plateau, 0) == 0.4);
    CHECK(evaluate_schedule(plateau, 299) == 0.4);
    CHECK(evaluate_schedule(plateau, 300) == 100.0);
    CHECK(evaluate_schedule(plateau, 499) == 100.0);
    CHECK(evaluate_schedule(plateau, 500) == 0.4);
}

TEST_CASE("schedule validation") {
    NoiseSchedule bad{ScheduleKind::constant, -0.1, 0.0, 1.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    NoiseSchedule zero_scale{ScheduleKind::sinexp, 0.2, 2.0, 0.0, 0.0};
    CHECK_THROWS_AS(zero_scale.validate(), std::invalid_argument);

    SimConfig cfg = quiet_config();
    cfg.schedule_h.kind = ScheduleKind::sinexp;
    cfg.schedule_h.s = 100.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // mode A wants constant sigma_h
}

TEST_CASE("simulation is reproducible bit for bit") {
    ModelWeights w = small_weights();
    SimConfig cfg = quiet_config(200);
    GmmPrior prior = GmmPrior::one_hot(3);
    TrajectoryRecord a = run_simulation(w, cfg, prior);
    TrajectoryRecord b = run_simulation(w, cfg, prior);
    REQUIRE(a.t.size() == b.t.size());
    REQUIRE_FALSE(a.diverged);
    for (std::size_t i = 0; i < a.t.size(); ++i) {
        CHECK((a.x[i] - b.x[i]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.c[i] - b.c[i]).cwiseAbs().maxCoeff() == 0.0);
    }

    SimConfig other = cfg;
    other.seed = cfg.seed + 1;
    TrajectoryRecord c = run_simulation(w, other, prior);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.t.size() && !any_diff; ++i)
        any_diff = (a.x[i] - c.x[i]).cwiseAbs().maxCoeff() > 0.0;
    CHECK(any_diff);
}

TEST_CASE("zero readout blocks the noise pathway") {
    ModelWeights w = small_weights(5);
    w.w_out.setZero();
    SimConfig cfg = quiet_config(40);
    cfg.noise_amplitude = 3.0;
    GmmPrior prior = GmmPrior::one_hot(3);
    cfg.record_state = true;
    TrajectoryRecord rec = run_simulation(w, cfg, prior);
    REQUIRE_FALSE(rec.diverged);

    // replicate the causes path: prior gradient alone drives c
    Precisions prec;
    prec.sigma_x = cfg.sigma_x;
    prec.tau = cfg.tau;
    prec.cause_rate = cfg.cause_rate;
    prec.cause_step_limit = cfg.cause_step_limit;
    NetworkState state = NetworkState::initial(w, one_hot(3, 0));
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
        prec.sigma_c = evaluate_schedule(cfg.schedule_c, rec.t[i]);
        prec.sigma_h = evaluate_schedule(cfg.schedule_h, rec.t[i]);
        Vec h = predict_hidden(state.c, state.h_post, w, prec);
        Vec c = update_causes(state.c, Vec::Zero(6), state.h_post, w, prec, prior);
        state.h = h;
        state.h_post = h;
        state.c = c;
        CHECK((rec.c[i] - state.c).cwiseAbs().maxCoeff() == 0.0);
        CHECK((rec.h_post[i] - state.h_post).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("underflowed prior freezes pinned causes at zero noise") {
    ModelWeights w = small_weights(7);
    SimConfig cfg;
    cfg.mode = SimMode::A;
    cfg.steps = 300;
    cfg.noise_amplitude = 0.0;
    cfg.sigma_x = 10.0;
    cfg.schedule_c = {ScheduleKind::constant, 0.01, 0.0, 1.0, 0.0};
    cfg.schedule_h = {ScheduleKind::constant, 10.0, 0.0, 1.0, 0.0};
    cfg.c_init = one_hot(3, 2);
    GmmPrior prior = GmmPrior::one_hot(3);
    TrajectoryRecord rec = run_simulation(w, cfg, prior);
    REQUIRE_FALSE(rec.diverged);
    for (const Vec& c : rec.c)
        CHECK((c - cfg.c_init).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("divergence aborts with a partial record and step index") {
    ModelWeights w = small_weights(11);
    SimConfig cfg = quiet_config(100);
    cfg.c_init = Vec(3);
    cfg.c_init << 1e308, 0.0, 0.0;  // overflows the gate on the first step
    GmmPrior prior = GmmPrior::one_hot(3);
    TrajectoryRecord rec = run_simulation(w, cfg, prior);
    CHECK(rec.diverged);
    CHECK(rec.divergence_step == 0);
    CHECK(rec.t.empty());
}

TEST_CASE("trajectory CSV round trip") {
    ModelWeights w = small_weights(13);
    SimConfig cfg = quiet_config(25);
    GmmPrior prior = GmmPrior::one_hot(3);
    TrajectoryRecord rec = run_simulation(w, cfg, prior);
    const std::string path = temp_path("pcrnn_test_traj.csv");
    write_trajectory_csv(rec, path);
    TrajectoryRecord back = read_trajectory_csv(path);
    REQUIRE(back.t.size() == rec.t.size());
    CHECK(back.p == 3);
    CHECK(back.m == 2);
    for (std::size_t i = 0; i < rec.t.size(); ++i) {
        CHECK(back.t[i] == rec.t[i]);
        CHECK((back.x[i] - rec.x[i]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.c[i] - rec.c[i]).cwiseAbs().maxCoeff() == 0.0);
        CHECK(back.sigma_c[i] == rec.sigma_c[i]);
        CHECK(back.sigma_h[i] == rec.sigma_h[i]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("corrupt trajectory headers are rejected") {
    const std::string path = temp_path("pcrnn_test_bad.csv");
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        std::fputs("time,x0,x1,c0,sigma_c,sigma_h\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(read_trajectory_csv(path), std::invalid_argument);
    std::filesystem::remove(path);
}

TEST_CASE("state statistics") {
    TrajectoryRecord rec;
    rec.m = 2;
    rec.p = 2;
    rec.config = quiet_config(0);
    Vec u = Vec::Ones(4), v = Vec::Zero(4);
    for (long t = 0; t < 40; ++t) {
        rec.t.push_back(t);
        rec.x.push_back(Vec::Zero(2));
        rec.c.push_back(Vec::Zero(2));
        rec.sigma_c.push_back(0.4);
        rec.sigma_h.push_back(0.1);
        rec.h_post.push_back(t % 2 == 0 ? u : v);
    }
    SUBCASE("alternating states have velocity ||u - v||") {
        StateStats stats = state_statistics(rec, 10, 0);
        REQUIRE(stats.mean_velocity.size() == 4);
        CHECK(stats.mean_velocity[1] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("constant states have zero velocity") {
        for (auto& h : rec.h_post)
            h = u;
        StateStats stats = state_statistics(rec, 10, 0);
        for (double vel : stats.mean_velocity)
            CHECK(vel == 0.0);
    }
    SUBCASE("window longer than the record throws") {
        CHECK_THROWS_AS(state_statistics(rec, 1000, 0), std::invalid_argument);
    }
}
