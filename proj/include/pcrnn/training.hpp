#pragma once

#include "pcrnn/model.hpp"
#include "pcrnn/targets.hpp"

#include <cstdint>
#include <vector>

namespace pcrnn {

// How the training rollout is produced.
//   open_loop:   prediction equations only, h_post == h, causes pinned at c0.
//   pc_detached: the full predict/infer step runs against the targets, but
//                every bottom-up correction is a constant for the backward
//                pass (it shifts activations without carrying gradient).
enum class RolloutMode { open_loop, pc_detached };

RolloutMode rollout_mode_from_string(const std::string& name);
std::string to_string(RolloutMode mode);

struct TrainConfig {
    int iterations = 1000;
    double learning_rate = 0.01;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    RolloutMode rollout_mode = RolloutMode::pc_detached;
    std::uint64_t seed = 0;
    ModelDims dims;
    Precisions precisions;   // noise levels used by pc_detached rollouts
    double init_gain = 1.0;  // multiplies the 1/sqrt(fan-in) init std-dev
    bool train_h_init = true;  // include the shared initial state in the Adam step
    // Std-dev of gradient-blocked state noise injected into pc_detached
    // rollouts. Perturbing the taught trajectory forces the learned cycles
    // to re-contract, which is what makes them attractors once the teacher
    // signal is gone. Annealed linearly to zero over the iterations so the
    // final loss floor is not noise-limited.
    double rollout_noise = 0.0;
    bool rollout_noise_anneal = true;

    void validate() const;
};

// Stored forward pass of one trajectory. Everything the backward pass needs,
// plus the bottom-up corrections so a replay can reproduce the rollout with
// the corrections frozen (that is what "detached" means numerically, and it
// is what the finite-difference oracle must differentiate through).
struct RolloutTrace {
    // per step s: inputs c_in[s], hpost_in[s]; activations; outputs x[s]
    std::vector<Vec> c_in, hpost_in, u, a, b, gate, h, v, x;
    // pc_detached only: additive correction applied to h and c after step s
    std::vector<Vec> h_corr, c_corr;
};

class Rng;

RolloutTrace rollout_trace(const ModelWeights& w, const Vec& h0, const Vec& c0,
                           int steps, const Precisions& prec, const GmmPrior& prior,
                           RolloutMode mode,
                           const std::vector<Vec>* targets = nullptr,
                           const RolloutTrace* replay_corrections = nullptr,
                           double state_noise = 0.0, Rng* noise_rng = nullptr);

// Output sequence of a rollout; x[s] is the prediction after s+1 state
// updates from (h0, c0).
std::vector<Vec> unroll(const ModelWeights& w, const Vec& h0, const Vec& c0,
                        int steps, const Precisions& prec, const GmmPrior& prior,
                        RolloutMode mode,
                        const std::vector<Vec>* targets = nullptr);

// Mean over steps and components of the squared difference.
double loss_mse(const std::vector<Vec>& pred, const std::vector<Vec>& target);

struct WeightGradients {
    Mat w_f, w_p, w_c, w_out;
    Vec h_init;

    static WeightGradients zero(const ModelDims& dims);
};

struct TrajectoryBatchItem {
    Vec c0;
    const std::vector<Vec>* targets = nullptr;
};

// Reverse-mode gradients of loss_mse over the unrolled prediction graph,
// averaged over the batch. Bottom-up corrections are constants in
// pc_detached mode. Also reports the batch-mean loss.
WeightGradients compute_gradients(const TrainConfig& cfg, const ModelWeights& w,
                                  const std::vector<TrajectoryBatchItem>& batch,
                                  double* batch_loss = nullptr,
                                  double state_noise = 0.0, Rng* noise_rng = nullptr);

struct AdamState {
    Mat m_f, v_f, m_p, v_p, m_c, v_c, m_out, v_out;
    Vec m_init, v_init;
    long t = 0;

    static AdamState zero(const ModelDims& dims);
};

// Standard Adam with bias correction, one step over the four weight
// matrices and, when include_h_init is set, the shared initial state.
void adam_step(ModelWeights& w, const WeightGradients& g, AdamState& state,
               double lr, double beta1, double beta2, double epsilon,
               bool include_h_init = true);

struct TrainResult {
    ModelWeights weights;
    std::vector<double> loss_curve;  // one entry per iteration
};

// Initializes weights from cfg.seed, then runs cfg.iterations batched BPTT
// steps over the p target trajectories (c0 = one-hot(k), shared h_init).
TrainResult train(const TrainConfig& cfg, const std::vector<TargetSpec>& specs);

// Weight initialization used by train(); exposed for tests and tools.
// Matrices are i.i.d. N(0, gain^2/fan-in); h_init is N(0, 1).
ModelWeights init_weights(const ModelDims& dims, std::uint64_t seed, double gain = 1.0);

}  // namespace pcrnn
