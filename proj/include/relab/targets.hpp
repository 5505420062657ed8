#ifndef RELAB_TARGETS_HPP
#define RELAB_TARGETS_HPP

#include <string>
#include <utility>
#include <vector>

#include "relab/common.hpp"
#include "relab/geometry.hpp"
#include "relab/quadrature.hpp"

namespace relab {

/// Continuous regression target together with the hyperplanes where its
/// directional derivatives jump (used for exact piecewise quadrature).
struct Target {
    ScalarField fn;
    std::vector<HalfSpace> kinks;
    std::string name;
};

inline Target target_abs(std::size_t d_in) {
    Target t;
    t.name = "abs";
    t.fn = [](PointView x) { return norm2(x); };
    if (d_in == 1) t.kinks.push_back(HalfSpace(UnitVector::axis(1, 0), 0.0));
    return t;
}

inline Target target_ramp(std::size_t d_in, double a) {
    Target t;
    t.name = "ramp";
    t.fn = [a](PointView x) { return std::max(x[0] - a, 0.0); };
    t.kinks.push_back(HalfSpace(UnitVector::axis(d_in, 0), a));
    return t;
}

inline Target target_quadratic(std::size_t) {
    Target t;
    t.name = "quadratic";
    t.fn = [](PointView x) { return dot(x, x); };
    return t;
}

inline Target target_constant(std::size_t, double value) {
    Target t;
    t.name = "constant";
    t.fn = [value](PointView) { return value; };
    return t;
}

/// One-dimensional continuous piecewise-linear interpolant through the knots,
/// extended beyond the ends with the boundary slopes.
inline Target target_piecewise_linear(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw InvalidArgument("piecewise-linear target needs >= 2 knots");
    std::sort(knots.begin(), knots.end());
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        if (!(knots[i].first < knots[i + 1].first))
            throw InvalidArgument("piecewise-linear target: knot abscissae must be distinct");
    Target t;
    t.name = "custom-piecewise-linear";
    t.fn = [knots](PointView x) {
        const double v = x[0];
        std::size_t seg = 0;
        while (seg + 2 < knots.size() && v > knots[seg + 1].first) ++seg;
        const auto& [x0, y0] = knots[seg];
        const auto& [x1, y1] = knots[seg + 1];
        return y0 + (y1 - y0) / (x1 - x0) * (v - x0);
    };
    for (std::size_t i = 1; i + 1 < knots.size(); ++i)
        t.kinks.push_back(HalfSpace(UnitVector::axis(1, 0), knots[i].first));
    return t;
}

} // namespace relab

#endif // RELAB_TARGETS_HPP
