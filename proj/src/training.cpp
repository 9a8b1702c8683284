#include "pcrnn/training.hpp"

#include "pcrnn/rng.hpp"

#include <cmath>

namespace pcrnn {

RolloutMode rollout_mode_from_string(const std::string& name) {
    if (name == "open_loop") return RolloutMode::open_loop;
    if (name == "pc_detached") return RolloutMode::pc_detached;
    throw std::invalid_argument("unknown rollout mode: " + name);
}

std::string to_string(RolloutMode mode) {
    return mode == RolloutMode::open_loop ? "open_loop" : "pc_detached";
}

void TrainConfig::validate() const {
    if (iterations < 0)
        throw std::invalid_argument("iterations must be >= 0");
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("learning_rate must be > 0");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
        !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
        throw std::invalid_argument("adam betas must lie in (0, 1)");
    if (!(adam_epsilon > 0.0))
        throw std::invalid_argument("adam_epsilon must be > 0");
    dims.validate();
    precisions.validate();
    if (!(init_gain > 0.0))
        throw std::invalid_argument("init_gain must be > 0");
}

RolloutTrace rollout_trace(const ModelWeights& w, const Vec& h0, const Vec& c0,
                           int steps, const Precisions& prec, const GmmPrior& prior,
                           RolloutMode mode, const std::vector<Vec>* targets,
                           const RolloutTrace* replay_corrections,
                           double state_noise, Rng* noise_rng) {
    w.validate();
    prec.validate();
    if (h0.size() != w.dims.n || c0.size() != w.dims.p)
        throw std::invalid_argument("rollout: shape mismatch");
    if (mode == RolloutMode::pc_detached && replay_corrections == nullptr) {
        if (targets == nullptr || static_cast<int>(targets->size()) < steps)
            throw std::invalid_argument("pc_detached rollout needs targets");
    }

    const double leak = 1.0 - 1.0 / prec.tau;
    RolloutTrace tr;
    auto reserve = [&](std::vector<Vec>& vs) { vs.reserve(static_cast<std::size_t>(steps)); };
    reserve(tr.c_in); reserve(tr.hpost_in); reserve(tr.u); reserve(tr.a);
    reserve(tr.b); reserve(tr.gate); reserve(tr.h); reserve(tr.v); reserve(tr.x);
    if (mode == RolloutMode::pc_detached) {
        reserve(tr.h_corr);
        reserve(tr.c_corr);
    }

    Vec hpost = h0;
    Vec c = c0;
    for (int s = 0; s < steps; ++s) {
        Vec u = hpost.array().tanh().matrix();
        Vec a = w.w_c.transpose() * c;
        Vec b = w.w_p.transpose() * u;
        Vec gate = (a.array() * b.array()).matrix();
        Vec h = leak * hpost + (1.0 / prec.tau) * (w.w_f * gate);
        Vec v = h.array().tanh().matrix();
        Vec x = w.w_out * v;
        if (!h.allFinite() || !x.allFinite())
            throw DivergenceError(s);

        tr.c_in.push_back(c);
        tr.hpost_in.push_back(hpost);
        tr.u.push_back(std::move(u));
        tr.a.push_back(std::move(a));
        tr.b.push_back(std::move(b));
        tr.gate.push_back(std::move(gate));

        if (mode == RolloutMode::pc_detached) {
            if (replay_corrections != nullptr) {
                hpost = h + replay_corrections->h_corr[static_cast<std::size_t>(s)];
                c = c + replay_corrections->c_corr[static_cast<std::size_t>(s)];
                tr.h_corr.push_back(replay_corrections->h_corr[static_cast<std::size_t>(s)]);
                tr.c_corr.push_back(replay_corrections->c_corr[static_cast<std::size_t>(s)]);
            } else {
                Vec eps = output_error(x, (*targets)[static_cast<std::size_t>(s)]);
                Vec hpost_new = update_hidden_posterior(h, eps, w, prec);
                Vec eps_h = h - hpost_new;
                Vec c_new = update_causes(c, eps_h, hpost, w, prec, prior);
                if (state_noise > 0.0 && noise_rng != nullptr)
                    for (int i = 0; i < w.dims.n; ++i)
                        hpost_new[i] += state_noise * noise_rng->normal();
                tr.h_corr.push_back(hpost_new - h);
                tr.c_corr.push_back(c_new - c);
                hpost = std::move(hpost_new);
                c = std::move(c_new);
            }
            if (!hpost.allFinite() || !c.allFinite())
                throw DivergenceError(s);
        } else {
            hpost = h;
        }

        tr.h.push_back(std::move(h));
        tr.v.push_back(std::move(v));
        tr.x.push_back(std::move(x));
    }
    return tr;
}

std::vector<Vec> unroll(const ModelWeights& w, const Vec& h0, const Vec& c0,
                        int steps, const Precisions& prec, const GmmPrior& prior,
                        RolloutMode mode, const std::vector<Vec>* targets) {
    return rollout_trace(w, h0, c0, steps, prec, prior, mode, targets).x;
}

double loss_mse(const std::vector<Vec>& pred, const std::vector<Vec>& target) {
    if (pred.size() != target.size())
        throw std::invalid_argument("loss_mse: length mismatch");
    if (pred.empty())
        throw std::invalid_argument("loss_mse: empty sequences");
    double sum = 0.0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        if (pred[s].size() != target[s].size())
            throw std::invalid_argument("loss_mse: component mismatch");
        sum += (pred[s] - target[s]).squaredNorm();
    }
    return sum / (static_cast<double>(pred.size()) * static_cast<double>(pred[0].size()));
}

WeightGradients WeightGradients::zero(const ModelDims& dims) {
    WeightGradients g;
    g.w_f = Mat::Zero(dims.n, dims.d);
    g.w_p = Mat::Zero(dims.n, dims.d);
    g.w_c = Mat::Zero(dims.p, dims.d);
    g.w_out = Mat::Zero(dims.m, dims.n);
    g.h_init = Vec::Zero(dims.n);
    return g;
}

namespace {

// Reverse pass over one stored rollout. The corrections linking h to h_post
// and c_t to c_{t+1} are constants, so gradient flows across steps with
// identity Jacobians in both rollout modes; only the stored activations
// differ between them.
void accumulate_backward(const RolloutTrace& tr, const std::vector<Vec>& targets,
                         const ModelWeights& w, double tau, WeightGradients& g) {
    const auto steps = static_cast<long>(tr.x.size());
    const double leak = 1.0 - 1.0 / tau;
    const double loss_scale =
        2.0 / (static_cast<double>(steps) * static_cast<double>(w.dims.m));

    Vec gh_post = Vec::Zero(w.dims.n);
    for (long s = steps - 1; s >= 0; --s) {
        const auto i = static_cast<std::size_t>(s);
        Vec gx = loss_scale * (tr.x[i] - targets[i]);
        g.w_out.noalias() += gx * tr.v[i].transpose();

        Vec gh = gh_post +
                 ((1.0 - tr.v[i].array().square()) *
                  (w.w_out.transpose() * gx).array())
                     .matrix();

        g.w_f.noalias() += (1.0 / tau) * gh * tr.gate[i].transpose();
        Vec gg = (1.0 / tau) * (w.w_f.transpose() * gh);
        Vec ga = (gg.array() * tr.b[i].array()).matrix();
        Vec gb = (gg.array() * tr.a[i].array()).matrix();

        g.w_c.noalias() += tr.c_in[i] * ga.transpose();
        g.w_p.noalias() += tr.u[i] * gb.transpose();

        gh_post = leak * gh +
                  ((1.0 - tr.u[i].array().square()) * (w.w_p * gb).array()).matrix();
    }
    g.h_init += gh_post;
}

}  // namespace

WeightGradients compute_gradients(const TrainConfig& cfg, const ModelWeights& w,
                                  const std::vector<TrajectoryBatchItem>& batch,
                                  double* batch_loss, double state_noise,
                                  Rng* noise_rng) {
    if (batch.empty())
        throw std::invalid_argument("compute_gradients: empty batch");
    WeightGradients g = WeightGradients::zero(w.dims);
    GmmPrior prior = GmmPrior::one_hot(w.dims.p);
    double loss_sum = 0.0;
    for (const auto& item : batch) {
        if (item.targets == nullptr || item.targets->empty())
            throw std::invalid_argument("compute_gradients: missing targets");
        const int steps = static_cast<int>(item.targets->size());
        RolloutTrace tr = rollout_trace(w, w.h_init, item.c0, steps, cfg.precisions,
                                        prior, cfg.rollout_mode, item.targets,
                                        nullptr, state_noise, noise_rng);
        loss_sum += loss_mse(tr.x, *item.targets);
        accumulate_backward(tr, *item.targets, w, cfg.precisions.tau, g);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    g.w_f *= inv;
    g.w_p *= inv;
    g.w_c *= inv;
    g.w_out *= inv;
    g.h_init *= inv;
    if (batch_loss != nullptr)
        *batch_loss = loss_sum * inv;
    return g;
}

AdamState AdamState::zero(const ModelDims& dims) {
    AdamState s;
    s.m_f = Mat::Zero(dims.n, dims.d);
    s.v_f = Mat::Zero(dims.n, dims.d);
    s.m_p = Mat::Zero(dims.n, dims.d);
    s.v_p = Mat::Zero(dims.n, dims.d);
    s.m_c = Mat::Zero(dims.p, dims.d);
    s.v_c = Mat::Zero(dims.p, dims.d);
    s.m_out = Mat::Zero(dims.m, dims.n);
    s.v_out = Mat::Zero(dims.m, dims.n);
    s.m_init = Vec::Zero(dims.n);
    s.v_init = Vec::Zero(dims.n);
    return s;
}

namespace {

template <typename Tensor>
void adam_update_tensor(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, long t,
                        double lr, double b1, double b2, double eps) {
    m = b1 * m + (1.0 - b1) * grad;
    v = (b2 * v.array() + (1.0 - b2) * grad.array().square()).matrix();
    const double m_corr = 1.0 / (1.0 - std::pow(b1, static_cast<double>(t)));
    const double v_corr = 1.0 / (1.0 - std::pow(b2, static_cast<double>(t)));
    param.array() -=
        lr * (m.array() * m_corr) / ((v.array() * v_corr).sqrt() + eps);
}

}  // namespace

void adam_step(ModelWeights& w, const WeightGradients& g, AdamState& state,
               double lr, double beta1, double beta2, double epsilon,
               bool include_h_init) {
    state.t += 1;
    adam_update_tensor(w.w_f, g.w_f, state.m_f, state.v_f, state.t, lr, beta1, beta2, epsilon);
    adam_update_tensor(w.w_p, g.w_p, state.m_p, state.v_p, state.t, lr, beta1, beta2, epsilon);
    adam_update_tensor(w.w_c, g.w_c, state.m_c, state.v_c, state.t, lr, beta1, beta2, epsilon);
    adam_update_tensor(w.w_out, g.w_out, state.m_out, state.v_out, state.t, lr, beta1, beta2, epsilon);
    if (include_h_init)
        adam_update_tensor(w.h_init, g.h_init, state.m_init, state.v_init, state.t,
                           lr, beta1, beta2, epsilon);
}

ModelWeights init_weights(const ModelDims& dims, std::uint64_t seed, double gain) {
    dims.validate();
    ModelWeights w;
    w.dims = dims;

    // One substream per tensor; entries filled in row-major order so the
    // result does not depend on construction order.
    auto fill = [&](Mat& mat, int rows, int cols, std::uint64_t stream, double stddev) {
        Rng rng = Rng::substream(seed, stream);
        mat.resize(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                mat(i, j) = rng.normal(0.0, stddev);
    };
    // fan-in of each matrix as it is applied in the prediction equations
    fill(w.w_f, dims.n, dims.d, 0, gain / std::sqrt(static_cast<double>(dims.d)));
    fill(w.w_p, dims.n, dims.d, 1, gain / std::sqrt(static_cast<double>(dims.n)));
    fill(w.w_c, dims.p, dims.d, 2, gain / std::sqrt(static_cast<double>(dims.p)));
    fill(w.w_out, dims.m, dims.n, 3, gain / std::sqrt(static_cast<double>(dims.n)));

    Rng rng = Rng::substream(seed, 4);
    w.h_init.resize(dims.n);
    for (int i = 0; i < dims.n; ++i)
        w.h_init[i] = rng.normal();
    return w;
}

TrainResult train(const TrainConfig& cfg, const std::vector<TargetSpec>& specs) {
    cfg.validate();
    if (static_cast<int>(specs.size()) != cfg.dims.p)
        throw std::invalid_argument("train: need exactly p target specs");

    ModelWeights w = init_weights(cfg.dims, cfg.seed, cfg.init_gain);

    std::vector<std::vector<Vec>> targets;
    targets.reserve(specs.size());
    for (const auto& spec : specs) {
        if (cfg.dims.m != 2)
            throw std::invalid_argument("train: targets are 2-D, so m must be 2");
        targets.push_back(generate_targets(spec));
    }
    std::vector<TrajectoryBatchItem> batch;
    for (int k = 0; k < cfg.dims.p; ++k)
        batch.push_back({one_hot(cfg.dims.p, k), &targets[static_cast<std::size_t>(k)]});

    TrainResult result;
    result.loss_curve.reserve(static_cast<std::size_t>(cfg.iterations));
    AdamState state = AdamState::zero(cfg.dims);
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        double noise = cfg.rollout_noise;
        if (cfg.rollout_noise_anneal && cfg.iterations > 1)
            noise *= 1.0 - static_cast<double>(iter) / (cfg.iterations - 1.0);
        Rng noise_rng = Rng::substream(cfg.seed, 1000 + static_cast<std::uint64_t>(iter));
        double loss = 0.0;
        WeightGradients g =
            compute_gradients(cfg, w, batch, &loss, noise, &noise_rng);
        result.loss_curve.push_back(loss);
        adam_step(w, g, state, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                  cfg.adam_epsilon, cfg.train_h_init);
    }
    result.weights = std::move(w);
    return result;
}

}  // namespace pcrnn
