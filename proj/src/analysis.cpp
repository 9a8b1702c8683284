#include "pcrnn/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace pcrnn {

AttractorLabeling classify_attractors(const TrajectoryRecord& rec, double theta,
                                      int dwell) {
    if (rec.c.empty())
        throw std::invalid_argument("classify_attractors: record has no causes");
    if (dwell < 1)
        throw std::invalid_argument("classify_attractors: dwell must be >= 1");
    const int p = rec.p;
    for (const Vec& c : rec.c)
        if (static_cast<int>(c.size()) != p)
            throw std::invalid_argument("classify_attractors: causes dimension mismatch");

    AttractorLabeling out;
    out.t = rec.t;
    out.p = p;
    out.theta = theta;
    out.dwell = dwell;
    out.labels.resize(rec.c.size(), neutral_label);

    // instantaneous winner-take-all with margin theta
    for (std::size_t i = 0; i < rec.c.size(); ++i) {
        int winner = neutral_label;
        int n_above = 0;
        for (int k = 0; k < p; ++k)
            if (rec.c[i][k] > theta) {
                winner = k;
                ++n_above;
            }
        if (n_above != 1)
            continue;
        bool others_below = true;
        for (int k = 0; k < p; ++k)
            if (k != winner && !(rec.c[i][k] < theta))
                others_below = false;
        if (others_below)
            out.labels[i] = winner;
    }

    // suppress runs sustained for less than `dwell` steps
    std::size_t i = 0;
    while (i < out.labels.size()) {
        if (out.labels[i] == neutral_label) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < out.labels.size() && out.labels[j + 1] == out.labels[i])
            ++j;
        const long duration = out.t[j] - out.t[i] + 1;
        if (duration < dwell)
            for (std::size_t k = i; k <= j; ++k)
                out.labels[k] = neutral_label;
        i = j + 1;
    }
    return out;
}

SelfTransitionMode self_transition_mode_from_string(const std::string& name) {
    if (name == "merge_short_gaps") return SelfTransitionMode::merge_short_gaps;
    if (name == "count_reentries") return SelfTransitionMode::count_reentries;
    throw std::invalid_argument("unknown self-transition mode: " + name);
}

std::string to_string(SelfTransitionMode mode) {
    return mode == SelfTransitionMode::merge_short_gaps ? "merge_short_gaps"
                                                        : "count_reentries";
}

std::vector<Visit> visit_sequence(const AttractorLabeling& labeling,
                                  SelfTransitionMode mode) {
    std::vector<Visit> visits;
    std::size_t i = 0;
    while (i < labeling.labels.size()) {
        if (labeling.labels[i] == neutral_label) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < labeling.labels.size() &&
               labeling.labels[j + 1] == labeling.labels[i])
            ++j;
        visits.push_back({labeling.labels[i], labeling.t[i], labeling.t[j]});
        i = j + 1;
    }

    if (mode == SelfTransitionMode::merge_short_gaps) {
        std::vector<Visit> merged;
        for (const Visit& v : visits) {
            if (!merged.empty() && merged.back().label == v.label &&
                v.begin_t - merged.back().end_t - 1 < labeling.dwell) {
                merged.back().end_t = v.end_t;
            } else {
                merged.push_back(v);
            }
        }
        return merged;
    }
    return visits;
}

std::vector<Transition> extract_transitions(const AttractorLabeling& labeling,
                                            SelfTransitionMode mode) {
    std::vector<Visit> visits = visit_sequence(labeling, mode);
    std::vector<Transition> pairs;
    for (std::size_t i = 1; i < visits.size(); ++i)
        pairs.push_back({visits[i - 1].label, visits[i].label, visits[i].begin_t});
    return pairs;
}

TransitionMatrix estimate_transition_matrix(const std::vector<Transition>& pairs,
                                            int p) {
    if (p < 1)
        throw std::invalid_argument("estimate_transition_matrix: p must be >= 1");
    TransitionMatrix tm;
    tm.counts = Eigen::MatrixXi::Zero(p, p);
    tm.probabilities = Mat::Zero(p, p);
    tm.populated.assign(static_cast<std::size_t>(p), false);
    tm.n_transitions = static_cast<long>(pairs.size());
    for (const Transition& pair : pairs) {
        if (pair.from < 0 || pair.from >= p || pair.to < 0 || pair.to >= p)
            throw std::invalid_argument("transition label out of range");
        tm.counts(pair.from, pair.to) += 1;
    }
    for (int i = 0; i < p; ++i) {
        const long row_sum = tm.counts.row(i).sum();
        if (row_sum > 0) {
            tm.populated[static_cast<std::size_t>(i)] = true;
            for (int j = 0; j < p; ++j)
                tm.probabilities(i, j) =
                    static_cast<double>(tm.counts(i, j)) / static_cast<double>(row_sum);
        }
    }
    return tm;
}

double row_independence_score(const TransitionMatrix& tm) {
    const auto p = tm.probabilities.rows();
    for (Eigen::Index i = 0; i < p; ++i)
        if (!tm.populated[static_cast<std::size_t>(i)])
            throw std::invalid_argument("row_independence_score: row " +
                                        std::to_string(i) + " has no transitions");
    double score = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j) {
            const double tv =
                0.5 * (tm.probabilities.row(i) - tm.probabilities.row(j))
                          .cwiseAbs()
                          .sum();
            score = std::max(score, tv);
        }
    return score;
}

double LandscapeGrid::coordinate(int index) const {
    return lo + (hi - lo) * static_cast<double>(index) /
                    static_cast<double>(resolution - 1);
}

LandscapeGrid gmm_landscape(const GmmPrior& prior, double sigma_c, double lo,
                            double hi, int resolution, int axis0, int axis1) {
    prior.validate();
    if (resolution < 2)
        throw std::invalid_argument("gmm_landscape: resolution must be >= 2");
    if (!(lo < hi))
        throw std::invalid_argument("gmm_landscape: bounds must satisfy lo < hi");
    const int p = static_cast<int>(prior.means.rows());
    if (axis0 < 0 || axis1 < 0 || axis0 >= p || axis1 >= p || axis0 == axis1)
        throw std::invalid_argument("gmm_landscape: bad axes pair");

    LandscapeGrid grid;
    grid.lo = lo;
    grid.hi = hi;
    grid.resolution = resolution;
    grid.axis0 = axis0;
    grid.axis1 = axis1;
    grid.density.resize(resolution, resolution);

    Vec c = Vec::Zero(p);
    for (int i = 0; i < resolution; ++i) {
        c[axis0] = grid.coordinate(i);
        for (int j = 0; j < resolution; ++j) {
            c[axis1] = grid.coordinate(j);
            grid.density(i, j) = std::exp(gmm_log_density(c, prior, sigma_c));
        }
    }
    return grid;
}

void write_landscape_csv(const LandscapeGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path + " for writing");
    out << "c0,c1,density\n";
    char buf[32];
    for (int i = 0; i < grid.resolution; ++i)
        for (int j = 0; j < grid.resolution; ++j) {
            std::string line;
            std::snprintf(buf, sizeof(buf), "%.17g", grid.coordinate(i));
            line += buf;
            line += ',';
            std::snprintf(buf, sizeof(buf), "%.17g", grid.coordinate(j));
            line += buf;
            line += ',';
            std::snprintf(buf, sizeof(buf), "%.17g", grid.density(i, j));
            line += buf;
            out << line << "\n";
        }
}

}  // namespace pcrnn
