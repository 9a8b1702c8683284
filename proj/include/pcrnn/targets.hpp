#pragma once

#include "pcrnn/model.hpp"

#include <string>
#include <vector>

namespace pcrnn {

enum class Shape { circle, square, triangle };

Shape shape_from_string(const std::string& name);
std::string to_string(Shape shape);

// One periodic 2-D target pattern. The generated sequence traces the closed
// shape once per period at constant parameter speed and is exactly periodic:
// x[t + period] == x[t] bit for bit.
struct TargetSpec {
    Shape shape = Shape::circle;
    int period = 60;      // steps per lap
    int length = 1000;    // total steps
    double amplitude = 1.0;

    void validate() const;
};

// circle:   (A cos(2 pi t / P), A sin(2 pi t / P))
// square:   perimeter of the axis-aligned square with half-side A,
//           counterclockwise from (A, A)
// triangle: perimeter of the equilateral triangle inscribed in the radius-A
//           circle, first vertex at angle pi/2, counterclockwise
std::vector<Vec> generate_targets(const TargetSpec& spec);

}  // namespace pcrnn
