#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>

namespace pcrnn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Raised when network state leaves the finite domain. Carries the step at
// which the run was aborted so transition statistics are never computed
// from NaN-contaminated trajectories.
struct DivergenceError : std::runtime_error {
    long step;
    explicit DivergenceError(long step_index);
};

struct ModelDims {
    int n = 100;  // hidden state size
    int p = 3;    // hidden causes size = number of attractors
    int d = 50;   // factor size
    int m = 2;    // output size

    // d defaults to n/2 (n must be even)
    static ModelDims with_default_factor(int n, int p, int m);
    void validate() const;
};

// The four learned matrices plus the fixed initial hidden state. The
// recurrent weights are the rank-d factorization of a (n, n, p) tensor:
// gating the state transition by the hidden causes costs three small
// matrices instead of n*n*p parameters.
struct ModelWeights {
    ModelDims dims;
    Mat w_f;    // n x d, factors -> hidden state
    Mat w_p;    // n x d, hidden state -> factors
    Mat w_c;    // p x d, hidden causes -> factors
    Mat w_out;  // m x n, hidden state -> output
    Vec h_init; // n, shared starting state for every attractor

    void validate() const;
    bool all_finite() const;
};

// Noise levels of the generative model plus the state time constant.
// cause_rate / cause_step_limit scale and bound the per-step causes update;
// the defaults (1, inf) reproduce the plain update rule. Simulations with
// small sigma_c need the bound: a full gradient step on a narrow mixture
// component is an unstable discrete map (gain 1/sigma_c^2 per step).
struct Precisions {
    double sigma_x = 1.0;  // output likelihood std-dev
    double sigma_h = 10.0; // state transition std-dev
    double sigma_c = 0.1;  // GMM component std-dev
    double tau = 5.0;      // state time constant, steps

    double cause_rate = 1.0;
    double cause_step_limit = std::numeric_limits<double>::infinity();

    void validate() const;
};

// Gaussian mixture prior over hidden causes: one isotropic component per
// attractor. Row k of `means` is the center of component k.
struct GmmPrior {
    Mat means;   // p x p
    Vec weights; // p, sums to 1

    // means = one-hot corners, uniform weights
    static GmmPrior one_hot(int p);
    void validate() const;
};

// Full per-step activation of the network, error units included. The error
// vectors are derivable from the rest but are kept explicit: they are the
// model's error neurons and tests assert on them directly.
struct NetworkState {
    Vec h;      // prior hidden state
    Vec h_post; // posterior hidden state (h*)
    Vec c;      // hidden causes
    Vec x;      // predicted output
    Vec eps;    // output error units
    Vec eps_h;  // state error units, h - h_post

    static NetworkState initial(const ModelWeights& w, const Vec& c0);
    bool all_finite() const;
};

// --- top-down prediction pass ---

// h_t = (1 - 1/tau) h*_{t-1} + (1/tau) W_f ((W_c^T c_{t-1}) o (W_p^T tanh(h*_{t-1})))
Vec predict_hidden(const Vec& c_prev, const Vec& h_post_prev,
                   const ModelWeights& w, const Precisions& prec);

// x_t = W_out tanh(h_t)
Vec predict_output(const Vec& h, const ModelWeights& w);

// --- bottom-up inference pass ---

// eps = x_pred - x_obs
Vec output_error(const Vec& x_pred, const Vec& x_obs);

// h* = h - (1/sigma_x^2) W_out^T eps
Vec update_hidden_posterior(const Vec& h, const Vec& eps,
                            const ModelWeights& w, const Precisions& prec);

// c' = c + cause_rate * clamp(delta, +-cause_step_limit), where
// delta = -(1/sigma_h^2) W_c ((W_f^T eps_h) o (W_p^T tanh(h_post_prev)))
//         + d log p(c) / dc
Vec update_causes(const Vec& c_prev, const Vec& eps_h, const Vec& h_post_prev,
                  const ModelWeights& w, const Precisions& prec,
                  const GmmPrior& prior);

// --- mixture prior ---

// log sum_k pi_k N(c; mu_k, sigma_c^2 I), evaluated max-shifted so that
// isolated modes stay representable at small sigma_c.
double gmm_log_density(const Vec& c, const GmmPrior& prior, double sigma_c);

// sum_k r_k(c) (mu_k - c) / sigma_c^2 with stabilized responsibilities r_k.
Vec gmm_log_density_grad(const Vec& c, const GmmPrior& prior, double sigma_c);

// --- free energy ---

// ||x_obs - g(h_post)||^2 / (2 sigma_x^2) + ||h_post - h||^2 / (2 sigma_h^2)
// - log p(c). The additive constant is fixed to zero.
double free_energy(const Vec& x_obs, const Vec& h, const Vec& h_post,
                   const Vec& c, const ModelWeights& w, const Precisions& prec,
                   const GmmPrior& prior);

// --- one full network step ---

// Prediction then inference against an observation.
NetworkState step_open_loop(const NetworkState& state, const Vec& x_obs,
                            const ModelWeights& w, const Precisions& prec,
                            const GmmPrior& prior);

// Same, but the output error is replaced by the supplied noise vector;
// no observation is consumed.
NetworkState step_closed_loop(const NetworkState& state, const Vec& noise,
                              const ModelWeights& w, const Precisions& prec,
                              const GmmPrior& prior);

Vec one_hot(int p, int k);

}  // namespace pcrnn
