#include "pcrnn/gradcheck.hpp"

#include "pcrnn/rng.hpp"

#include <cmath>
#include <functional>

namespace pcrnn {

namespace {

double rel_error(const Vec& approx, const Vec& exact) {
    const double scale = std::max(exact.cwiseAbs().maxCoeff(), 1e-8);
    return (approx - exact).cwiseAbs().maxCoeff() / scale;
}

Vec random_vec(Rng& rng, int size, double stddev = 1.0) {
    Vec v(size);
    for (int i = 0; i < size; ++i)
        v[i] = rng.normal(0.0, stddev);
    return v;
}

// Central finite differences of a scalar function of a vector.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& at,
                double step) {
    Vec grad(at.size());
    Vec probe = at;
    for (Eigen::Index i = 0; i < at.size(); ++i) {
        probe[i] = at[i] + step;
        const double hi = f(probe);
        probe[i] = at[i] - step;
        const double lo = f(probe);
        probe[i] = at[i];
        grad[i] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

double check_gmm_gradient(std::uint64_t seed, int points) {
    double worst = 0.0;
    const int sizes[] = {1, 2, 3};
    const double sigmas[] = {0.1, 0.4, 0.8};
    int stream = 0;
    for (int p : sizes) {
        GmmPrior prior = GmmPrior::one_hot(p);
        for (double sigma : sigmas) {
            Rng rng = Rng::substream(seed, 100 + static_cast<std::uint64_t>(stream++));
            for (int i = 0; i < points; ++i) {
                // mix of points near a component and free-floating ones
                Vec c = random_vec(rng, p, 0.5);
                if (i % 2 == 0) {
                    const int k = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(p));
                    c = prior.means.row(k).transpose() + sigma * random_vec(rng, p);
                }
                Vec analytic = gmm_log_density_grad(c, prior, sigma);
                Vec fd = fd_gradient(
                    [&](const Vec& point) { return gmm_log_density(point, prior, sigma); },
                    c, 1e-6);
                worst = std::max(worst, rel_error(fd, analytic));
            }
        }
    }
    return worst;
}

// With a linear readout the posterior correction is exactly the negative
// gradient of the output error term; verified against finite differences.
double check_output_term(const ModelWeights& w, const Precisions& prec,
                         std::uint64_t seed) {
    Rng rng = Rng::substream(seed, 200);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        Vec h = random_vec(rng, w.dims.n);
        Vec x_obs = random_vec(rng, w.dims.m);
        auto term = [&](const Vec& state) {
            return (x_obs - w.w_out * state).squaredNorm() /
                   (2.0 * prec.sigma_x * prec.sigma_x);
        };
        Vec eps = w.w_out * h - x_obs;  // linear-readout output error
        Vec correction = h - update_hidden_posterior(h, eps, w, prec);
        Vec fd = fd_gradient(term, h, 1e-6);
        worst = std::max(worst, rel_error(fd, correction));
    }
    return worst;
}

// The bottom-up causes term equals -tau times the gradient of the state
// error term of the free energy with respect to the causes.
double check_state_term(const ModelWeights& w, const Precisions& prec,
                        std::uint64_t seed) {
    Rng rng = Rng::substream(seed, 300);
    GmmPrior prior = GmmPrior::one_hot(w.dims.p);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        Vec h_prev = random_vec(rng, w.dims.n);
        Vec c = random_vec(rng, w.dims.p, 0.7);
        Vec h = predict_hidden(c, h_prev, w, prec);
        Vec h_post = h + random_vec(rng, w.dims.n, 0.1);
        Vec eps_h = h - h_post;

        // isolate the bottom-up part of the causes update by differencing
        // out the prior term
        Vec with_error = update_causes(c, eps_h, h_prev, w, prec, prior);
        Vec without_error = update_causes(c, Vec::Zero(w.dims.n), h_prev, w, prec, prior);
        Vec bottom_up = with_error - without_error;

        auto term = [&](const Vec& causes) {
            return (h_post - predict_hidden(causes, h_prev, w, prec)).squaredNorm() /
                   (2.0 * prec.sigma_h * prec.sigma_h);
        };
        Vec fd = fd_gradient(term, c, 1e-6);
        Vec expected = -prec.tau * fd;
        worst = std::max(worst, rel_error(expected, bottom_up));
    }
    return worst;
}

struct FlatParams {
    std::vector<double*> entries;

    static FlatParams collect(ModelWeights& w) {
        FlatParams fp;
        auto add = [&](Mat& mat) {
            for (Eigen::Index j = 0; j < mat.cols(); ++j)
                for (Eigen::Index i = 0; i < mat.rows(); ++i)
                    fp.entries.push_back(&mat(i, j));
        };
        add(w.w_f);
        add(w.w_p);
        add(w.w_c);
        add(w.w_out);
        for (Eigen::Index i = 0; i < w.h_init.size(); ++i)
            fp.entries.push_back(&w.h_init[i]);
        return fp;
    }
};

double check_bptt(const ModelWeights& weights, const TrainConfig& cfg,
                  const Vec& c0, const std::vector<Vec>& targets,
                  bool inject_fault) {
    GmmPrior prior = GmmPrior::one_hot(weights.dims.p);
    const int steps = static_cast<int>(targets.size());

    std::vector<TrajectoryBatchItem> batch{{c0, &targets}};
    WeightGradients analytic = compute_gradients(cfg, weights, batch);
    if (inject_fault)
        analytic.w_f(0, 0) += 0.05 * (analytic.w_f.cwiseAbs().maxCoeff() + 1.0);

    // pc_detached differentiates through frozen corrections, so record them
    // once at the unperturbed weights
    RolloutTrace base;
    if (cfg.rollout_mode == RolloutMode::pc_detached)
        base = rollout_trace(weights, weights.h_init, c0, steps, cfg.precisions,
                             prior, cfg.rollout_mode, &targets);

    ModelWeights probe = weights;
    auto loss_at = [&]() {
        const RolloutTrace* replay =
            cfg.rollout_mode == RolloutMode::pc_detached ? &base : nullptr;
        RolloutTrace tr = rollout_trace(probe, probe.h_init, c0, steps,
                                        cfg.precisions, prior, cfg.rollout_mode,
                                        &targets, replay);
        return loss_mse(tr.x, targets);
    };

    FlatParams params = FlatParams::collect(probe);
    ModelWeights analytic_as_weights = weights;
    analytic_as_weights.w_f = analytic.w_f;
    analytic_as_weights.w_p = analytic.w_p;
    analytic_as_weights.w_c = analytic.w_c;
    analytic_as_weights.w_out = analytic.w_out;
    analytic_as_weights.h_init = analytic.h_init;
    FlatParams analytic_flat = FlatParams::collect(analytic_as_weights);

    const double step = 1e-5;
    double scale = 1e-8;
    for (double* g : analytic_flat.entries)
        scale = std::max(scale, std::abs(*g));

    double worst = 0.0;
    for (std::size_t i = 0; i < params.entries.size(); ++i) {
        const double saved = *params.entries[i];
        *params.entries[i] = saved + step;
        const double hi = loss_at();
        *params.entries[i] = saved - step;
        const double lo = loss_at();
        *params.entries[i] = saved;
        const double fd = (hi - lo) / (2.0 * step);
        worst = std::max(worst, std::abs(fd - *analytic_flat.entries[i]) / scale);
    }
    return worst;
}

}  // namespace

bool GradCheckReport::ok() const {
    return gmm_grad_error < gmm_tolerance && output_term_error < term_tolerance &&
           state_term_error < term_tolerance && bptt_open_error < bptt_tolerance &&
           bptt_detached_error < bptt_tolerance;
}

std::string GradCheckReport::worst_name() const {
    std::string name = "none";
    double worst = 0.0;
    auto consider = [&](double err, double tol, const char* label) {
        if (err >= tol && err / tol > worst) {
            worst = err / tol;
            name = label;
        }
    };
    consider(gmm_grad_error, gmm_tolerance, "gmm prior gradient");
    consider(output_term_error, term_tolerance, "free-energy output term");
    consider(state_term_error, term_tolerance, "free-energy state term");
    consider(bptt_open_error, bptt_tolerance, "bptt open_loop");
    consider(bptt_detached_error, bptt_tolerance, "bptt pc_detached");
    return name;
}

GradCheckReport run_gradcheck(const GradCheckOptions& opts) {
    opts.dims.validate();
    if (opts.timesteps < 1)
        throw std::invalid_argument("gradcheck needs at least one timestep");

    GradCheckReport report;
    report.gmm_grad_error = check_gmm_gradient(opts.seed, opts.gmm_points / 2);

    // noise levels chosen so unclamped inference stays well-behaved on the
    // random instance; the gradient identities hold for any valid values
    Precisions prec;
    prec.sigma_x = 1.5;
    prec.sigma_h = 2.0;
    prec.sigma_c = 1.2;
    prec.tau = 3.0;

    ModelWeights weights = init_weights(opts.dims, opts.seed);
    report.output_term_error = check_output_term(weights, prec, opts.seed);
    report.state_term_error = check_state_term(weights, prec, opts.seed);

    Rng rng = Rng::substream(opts.seed, 400);
    std::vector<Vec> targets;
    targets.reserve(static_cast<std::size_t>(opts.timesteps));
    for (int t = 0; t < opts.timesteps; ++t)
        targets.push_back(random_vec(rng, opts.dims.m, 0.5));
    Vec c0 = random_vec(rng, opts.dims.p, 0.5);

    TrainConfig cfg;
    cfg.dims = opts.dims;
    cfg.precisions = prec;

    cfg.rollout_mode = RolloutMode::open_loop;
    report.bptt_open_error = check_bptt(weights, cfg, c0, targets, opts.inject_fault);
    cfg.rollout_mode = RolloutMode::pc_detached;
    report.bptt_detached_error = check_bptt(weights, cfg, c0, targets, false);
    return report;
}

}  // namespace pcrnn
