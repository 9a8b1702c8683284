#pragma once

#include "pcrnn/model.hpp"
#include "pcrnn/training.hpp"

#include <cstdint>
#include <string>

namespace pcrnn {

// Finite-difference verification of every gradient pathway: the mixture
// prior gradient, the two free-energy error terms, and full BPTT in both
// rollout modes. Used by the `gradcheck` CLI command and by tests.
struct GradCheckOptions {
    std::uint64_t seed = 1;
    ModelDims dims{6, 2, 3, 2};
    int timesteps = 20;
    int gmm_points = 100;
    bool inject_fault = false;  // self-test hook: corrupt one gradient entry
};

struct GradCheckReport {
    double gmm_grad_error = 0.0;
    double output_term_error = 0.0;
    double state_term_error = 0.0;
    double bptt_open_error = 0.0;
    double bptt_detached_error = 0.0;

    double gmm_tolerance = 1e-5;
    double term_tolerance = 1e-5;
    double bptt_tolerance = 1e-4;

    bool ok() const;
    std::string worst_name() const;
};

GradCheckReport run_gradcheck(const GradCheckOptions& opts);

}  // namespace pcrnn
