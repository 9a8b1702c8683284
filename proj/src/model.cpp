#include "pcrnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pcrnn {

DivergenceError::DivergenceError(long step_index)
    : std::runtime_error("non-finite network state at step " + std::to_string(step_index)),
      step(step_index) {}

ModelDims ModelDims::with_default_factor(int n, int p, int m) {
    if (n % 2 != 0)
        throw std::invalid_argument("default factor size d = n/2 requires even n");
    ModelDims dims;
    dims.n = n;
    dims.p = p;
    dims.d = n / 2;
    dims.m = m;
    dims.validate();
    return dims;
}

void ModelDims::validate() const {
    if (n < 1 || p < 1 || d < 1 || m < 1)
        throw std::invalid_argument("model dimensions must all be >= 1");
}

void ModelWeights::validate() const {
    dims.validate();
    auto check = [](const Mat& mat, int rows, int cols, const char* name) {
        if (mat.rows() != rows || mat.cols() != cols)
            throw std::invalid_argument(std::string(name) + ": shape mismatch");
    };
    check(w_f, dims.n, dims.d, "w_f");
    check(w_p, dims.n, dims.d, "w_p");
    check(w_c, dims.p, dims.d, "w_c");
    check(w_out, dims.m, dims.n, "w_out");
    if (h_init.size() != dims.n)
        throw std::invalid_argument("h_init: shape mismatch");
    if (!all_finite())
        throw std::invalid_argument("weights contain non-finite entries");
}

bool ModelWeights::all_finite() const {
    return w_f.allFinite() && w_p.allFinite() && w_c.allFinite() &&
           w_out.allFinite() && h_init.allFinite();
}

void Precisions::validate() const {
    if (!(sigma_x > 0.0) || !(sigma_h > 0.0) || !(sigma_c > 0.0))
        throw std::invalid_argument("sigma_x, sigma_h, sigma_c must be > 0");
    if (!(tau >= 1.0))
        throw std::invalid_argument("tau must be >= 1");
    if (!(cause_rate > 0.0) || !(cause_step_limit > 0.0))
        throw std::invalid_argument("cause_rate and cause_step_limit must be > 0");
}

GmmPrior GmmPrior::one_hot(int p) {
    GmmPrior prior;
    prior.means = Mat::Identity(p, p);
    prior.weights = Vec::Constant(p, 1.0 / p);
    return prior;
}

void GmmPrior::validate() const {
    if (means.rows() != means.cols() || means.rows() < 1)
        throw std::invalid_argument("prior means must be a p x p matrix");
    if (weights.size() != means.rows())
        throw std::invalid_argument("prior weights size must match component count");
    if ((weights.array() < 0.0).any())
        throw std::invalid_argument("prior weights must be nonnegative");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("prior weights must sum to 1");
}

Vec one_hot(int p, int k) {
    if (k < 0 || k >= p)
        throw std::invalid_argument("one_hot index out of range");
    Vec v = Vec::Zero(p);
    v[k] = 1.0;
    return v;
}

NetworkState NetworkState::initial(const ModelWeights& w, const Vec& c0) {
    if (c0.size() != w.dims.p)
        throw std::invalid_argument("c0: shape mismatch");
    NetworkState s;
    s.h = w.h_init;
    s.h_post = w.h_init;
    s.c = c0;
    s.x = Vec::Zero(w.dims.m);
    s.eps = Vec::Zero(w.dims.m);
    s.eps_h = Vec::Zero(w.dims.n);
    return s;
}

bool NetworkState::all_finite() const {
    return h.allFinite() && h_post.allFinite() && c.allFinite() &&
           x.allFinite() && eps.allFinite() && eps_h.allFinite();
}

Vec predict_hidden(const Vec& c_prev, const Vec& h_post_prev,
                   const ModelWeights& w, const Precisions& prec) {
    if (c_prev.size() != w.dims.p || h_post_prev.size() != w.dims.n)
        throw std::invalid_argument("predict_hidden: shape mismatch");
    const double leak = 1.0 - 1.0 / prec.tau;
    Vec tanh_h = h_post_prev.array().tanh().matrix();
    Vec gate = ((w.w_c.transpose() * c_prev).array() *
                (w.w_p.transpose() * tanh_h).array())
                   .matrix();
    Vec h = leak * h_post_prev + (1.0 / prec.tau) * (w.w_f * gate);
    if (!h.allFinite())
        throw std::invalid_argument("predict_hidden: non-finite result");
    return h;
}

Vec predict_output(const Vec& h, const ModelWeights& w) {
    if (h.size() != w.dims.n)
        throw std::invalid_argument("predict_output: shape mismatch");
    return w.w_out * h.array().tanh().matrix();
}

Vec output_error(const Vec& x_pred, const Vec& x_obs) {
    if (x_pred.size() != x_obs.size())
        throw std::invalid_argument("output_error: shape mismatch");
    return x_pred - x_obs;
}

Vec update_hidden_posterior(const Vec& h, const Vec& eps,
                            const ModelWeights& w, const Precisions& prec) {
    if (h.size() != w.dims.n || eps.size() != w.dims.m)
        throw std::invalid_argument("update_hidden_posterior: shape mismatch");
    if (!(prec.sigma_x > 0.0))
        throw std::invalid_argument("update_hidden_posterior: sigma_x must be > 0");
    return h - (1.0 / (prec.sigma_x * prec.sigma_x)) * (w.w_out.transpose() * eps);
}

Vec update_causes(const Vec& c_prev, const Vec& eps_h, const Vec& h_post_prev,
                  const ModelWeights& w, const Precisions& prec,
                  const GmmPrior& prior) {
    if (c_prev.size() != w.dims.p || eps_h.size() != w.dims.n ||
        h_post_prev.size() != w.dims.n)
        throw std::invalid_argument("update_causes: shape mismatch");
    if (!(prec.sigma_h > 0.0))
        throw std::invalid_argument("update_causes: sigma_h must be > 0");

    Vec tanh_h = h_post_prev.array().tanh().matrix();
    Vec gate = ((w.w_f.transpose() * eps_h).array() *
                (w.w_p.transpose() * tanh_h).array())
                   .matrix();
    Vec delta = -(1.0 / (prec.sigma_h * prec.sigma_h)) * (w.w_c * gate) +
                gmm_log_density_grad(c_prev, prior, prec.sigma_c);
    if (!delta.allFinite())
        throw std::invalid_argument("update_causes: non-finite prior gradient");

    const double lim = prec.cause_step_limit;
    Vec step = (prec.cause_rate * delta).cwiseMax(-lim).cwiseMin(lim);
    return c_prev + step;
}

namespace {

constexpr double two_pi = 6.28318530717958647692;

// log pi_k + log N(c; mu_k, sigma_c^2 I) for every component
Vec component_log_terms(const Vec& c, const GmmPrior& prior, double sigma_c) {
    const auto p = prior.means.rows();
    const double log_norm =
        -0.5 * static_cast<double>(c.size()) * std::log(two_pi * sigma_c * sigma_c);
    Vec terms(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const double sq = (c - prior.means.row(k).transpose()).squaredNorm();
        const double log_w = prior.weights[k] > 0.0
                                 ? std::log(prior.weights[k])
                                 : -std::numeric_limits<double>::infinity();
        terms[k] = log_w + log_norm - sq / (2.0 * sigma_c * sigma_c);
    }
    return terms;
}

}  // namespace

double gmm_log_density(const Vec& c, const GmmPrior& prior, double sigma_c) {
    if (!(sigma_c > 0.0))
        throw std::invalid_argument("gmm_log_density: sigma_c must be > 0");
    if (c.size() != prior.means.cols())
        throw std::invalid_argument("gmm_log_density: shape mismatch");
    Vec terms = component_log_terms(c, prior, sigma_c);
    const double top = terms.maxCoeff();
    // scalar std::exp: fully underflowed components must contribute exactly
    // zero (Eigen's vectorized exp clamps instead and leaks denormals)
    double sum = 0.0;
    for (Eigen::Index k = 0; k < terms.size(); ++k)
        sum += std::exp(terms[k] - top);
    return top + std::log(sum);
}

Vec gmm_log_density_grad(const Vec& c, const GmmPrior& prior, double sigma_c) {
    if (!(sigma_c > 0.0))
        throw std::invalid_argument("gmm_log_density_grad: sigma_c must be > 0");
    if (c.size() != prior.means.cols())
        throw std::invalid_argument("gmm_log_density_grad: shape mismatch");
    Vec terms = component_log_terms(c, prior, sigma_c);
    const double top = terms.maxCoeff();
    Vec resp(terms.size());
    for (Eigen::Index k = 0; k < terms.size(); ++k)
        resp[k] = std::exp(terms[k] - top);
    resp /= resp.sum();

    Vec grad = Vec::Zero(c.size());
    for (Eigen::Index k = 0; k < prior.means.rows(); ++k)
        grad += resp[k] * (prior.means.row(k).transpose() - c);
    return grad / (sigma_c * sigma_c);
}

double free_energy(const Vec& x_obs, const Vec& h, const Vec& h_post,
                   const Vec& c, const ModelWeights& w, const Precisions& prec,
                   const GmmPrior& prior) {
    if (x_obs.size() != w.dims.m || h.size() != w.dims.n || h_post.size() != w.dims.n)
        throw std::invalid_argument("free_energy: shape mismatch");
    const double accuracy =
        (x_obs - predict_output(h_post, w)).squaredNorm() /
        (2.0 * prec.sigma_x * prec.sigma_x);
    const double state_term =
        (h_post - h).squaredNorm() / (2.0 * prec.sigma_h * prec.sigma_h);
    return accuracy + state_term - gmm_log_density(c, prior, prec.sigma_c);
}

namespace {

NetworkState step_impl(const NetworkState& state, const Vec& eps,
                       const ModelWeights& w, const Precisions& prec,
                       const GmmPrior& prior, Vec h, Vec x) {
    NetworkState next;
    next.h = std::move(h);
    next.x = std::move(x);
    next.eps = eps;
    next.h_post = update_hidden_posterior(next.h, next.eps, w, prec);
    next.eps_h = next.h - next.h_post;
    next.c = update_causes(state.c, next.eps_h, state.h_post, w, prec, prior);
    return next;
}

}  // namespace

NetworkState step_open_loop(const NetworkState& state, const Vec& x_obs,
                            const ModelWeights& w, const Precisions& prec,
                            const GmmPrior& prior) {
    Vec h = predict_hidden(state.c, state.h_post, w, prec);
    Vec x = predict_output(h, w);
    Vec eps = output_error(x, x_obs);
    return step_impl(state, eps, w, prec, prior, std::move(h), std::move(x));
}

NetworkState step_closed_loop(const NetworkState& state, const Vec& noise,
                              const ModelWeights& w, const Precisions& prec,
                              const GmmPrior& prior) {
    if (noise.size() != w.dims.m)
        throw std::invalid_argument("step_closed_loop: noise shape mismatch");
    Vec h = predict_hidden(state.c, state.h_post, w, prec);
    Vec x = predict_output(h, w);
    return step_impl(state, noise, w, prec, prior, std::move(h), std::move(x));
}

}  // namespace pcrnn
