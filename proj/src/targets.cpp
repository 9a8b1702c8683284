#include "pcrnn/targets.hpp"

#include <cmath>

namespace pcrnn {

namespace {

constexpr double pi = 3.14159265358979323846;

// Point at perimeter fraction u in [0, 1) of the closed polygon.
Vec polygon_point(const std::vector<Vec>& vertices, double u) {
    const auto sides = vertices.size();
    const double s = u * static_cast<double>(sides);
    auto edge = static_cast<std::size_t>(s);
    if (edge >= sides)
        edge = sides - 1;
    const double lambda = s - static_cast<double>(edge);
    const Vec& a = vertices[edge];
    const Vec& b = vertices[(edge + 1) % sides];
    return a + lambda * (b - a);
}

}  // namespace

Shape shape_from_string(const std::string& name) {
    if (name == "circle") return Shape::circle;
    if (name == "square") return Shape::square;
    if (name == "triangle") return Shape::triangle;
    throw std::invalid_argument("unknown shape: " + name);
}

std::string to_string(Shape shape) {
    switch (shape) {
        case Shape::circle: return "circle";
        case Shape::square: return "square";
        case Shape::triangle: return "triangle";
    }
    throw std::invalid_argument("unknown shape enum value");
}

void TargetSpec::validate() const {
    if (period < 2)
        throw std::invalid_argument("target period must be >= 2");
    if (length < period)
        throw std::invalid_argument("target length must be >= period");
    if (!(amplitude > 0.0))
        throw std::invalid_argument("target amplitude must be > 0");
    const int sides = shape == Shape::square ? 4 : shape == Shape::triangle ? 3 : 0;
    if (sides > 0 && period < 3 * sides)
        throw std::invalid_argument("polygon period must give >= 3 samples per edge");
}

std::vector<Vec> generate_targets(const TargetSpec& spec) {
    spec.validate();
    const double A = spec.amplitude;

    std::vector<Vec> vertices;
    if (spec.shape == Shape::square) {
        vertices = {Vec{{A, A}}, Vec{{-A, A}}, Vec{{-A, -A}}, Vec{{A, -A}}};
    } else if (spec.shape == Shape::triangle) {
        for (int v = 0; v < 3; ++v) {
            const double angle = pi / 2.0 + 2.0 * pi * v / 3.0;
            vertices.push_back(Vec{{A * std::cos(angle), A * std::sin(angle)}});
        }
    }

    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(spec.length));
    for (int t = 0; t < spec.length; ++t) {
        // Exact periodicity: the phase depends only on t mod period.
        const double u = static_cast<double>(t % spec.period) / spec.period;
        if (spec.shape == Shape::circle) {
            const double angle = 2.0 * pi * u;
            out.push_back(Vec{{A * std::cos(angle), A * std::sin(angle)}});
        } else {
            out.push_back(polygon_point(vertices, u));
        }
    }
    return out;
}

}  // namespace pcrnn
