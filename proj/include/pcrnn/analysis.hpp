#pragma once

#include "pcrnn/model.hpp"
#include "pcrnn/simulation.hpp"

#include <string>
#include <vector>

namespace pcrnn {

// Hysteresis attractor detector output. A step is labeled k only when
// cause k exceeds theta, every other cause is below theta, and the
// condition holds for at least `dwell` consecutive steps; everything else
// is neutral (-1). Labels partition the timeline.
struct AttractorLabeling {
    std::vector<long> t;
    std::vector<int> labels;  // -1 = neutral
    int p = 0;
    double theta = 0.5;
    int dwell = 30;
};

inline constexpr int neutral_label = -1;

AttractorLabeling classify_attractors(const TrajectoryRecord& rec, double theta,
                                      int dwell);

// How a visit of attractor k followed by a neutral gap and k again is
// counted. merge_short_gaps folds the re-entry into one visit when the gap
// is shorter than the dwell and no other attractor intervened;
// count_reentries turns every re-entry into a k -> k transition.
enum class SelfTransitionMode { merge_short_gaps, count_reentries };

SelfTransitionMode self_transition_mode_from_string(const std::string& name);
std::string to_string(SelfTransitionMode mode);

struct Visit {
    int label;
    long begin_t;
    long end_t;  // inclusive
};

std::vector<Visit> visit_sequence(const AttractorLabeling& labeling,
                                  SelfTransitionMode mode);

struct Transition {
    int from;
    int to;
    long step;  // first step of the destination visit
};

std::vector<Transition> extract_transitions(
    const AttractorLabeling& labeling,
    SelfTransitionMode mode = SelfTransitionMode::merge_short_gaps);

// Row-stochastic estimate built from transition counts. Rows with no
// outgoing transitions are flagged unpopulated, never fabricated.
struct TransitionMatrix {
    Eigen::MatrixXi counts;
    Mat probabilities;
    long n_transitions = 0;
    std::vector<bool> populated;
};

TransitionMatrix estimate_transition_matrix(const std::vector<Transition>& pairs,
                                            int p);

// Maximum over row pairs of the total-variation distance between rows;
// 0 means the next attractor is independent of the previous one.
double row_independence_score(const TransitionMatrix& tm);

// Mixture density evaluated on a regular 2-D grid (a coordinate-plane slice
// through the axes pair when p > 2; remaining coordinates held at 0).
struct LandscapeGrid {
    double lo = 0.0;
    double hi = 0.0;
    int resolution = 0;
    int axis0 = 0;
    int axis1 = 1;
    Mat density;  // density(i, j) at c0 = grid[i], c1 = grid[j]

    double coordinate(int index) const;
};

LandscapeGrid gmm_landscape(const GmmPrior& prior, double sigma_c, double lo,
                            double hi, int resolution, int axis0 = 0,
                            int axis1 = 1);

void write_landscape_csv(const LandscapeGrid& grid, const std::string& path);

}  // namespace pcrnn
