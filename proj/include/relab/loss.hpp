#ifndef RELAB_LOSS_HPP
#define RELAB_LOSS_HPP

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "relab/common.hpp"
#include "relab/quadrature.hpp"
#include "relab/targets.hpp"

namespace relab {

// ----------------------------------------------------------------------------
// Loss specifications
// ----------------------------------------------------------------------------

struct LossMetadata {
    bool convex_in_y = false;
    bool attains_min = false;
    std::optional<double> p;
};

/// Pointwise loss L(x, y) >= 0. `grad_y` and `target` are optional extras:
/// construction-time formulas when available, otherwise numeric fallbacks.
struct LossSpec {
    std::function<double(PointView, double)> pointwise;
    LossMetadata metadata;
    std::function<double(PointView, double)> grad_y; // d/dy L(x, y), may be empty
    ScalarField target;                              // regression target, may be empty
    std::vector<HalfSpace> target_kinks;             // derivative jumps of the target

    double operator()(PointView x, double y) const { return pointwise(x, y); }

    double dloss_dy(PointView x, double y) const {
        if (grad_y) return grad_y(x, y);
        const double h = 1e-6 * (1.0 + std::abs(y));
        return (pointwise(x, y + h) - pointwise(x, y - h)) / (2.0 * h);
    }
};

/// L(x, y) = |y - f(x)|^p for p > 1; strictly convex in y, attains its minimum.
inline LossSpec lp_loss(ScalarField f, double p) {
    if (!(p > 1.0)) throw BadExponent("lp_loss: requires p > 1");
    LossSpec spec;
    spec.metadata = {true, true, p};
    spec.target = f;
    if (p == 2.0) {
        spec.pointwise = [f](PointView x, double y) {
            const double r = y - f(x);
            return r * r;
        };
        spec.grad_y = [f](PointView x, double y) { return 2.0 * (y - f(x)); };
    } else {
        spec.pointwise = [f, p](PointView x, double y) {
            return std::pow(std::abs(y - f(x)), p);
        };
        spec.grad_y = [f, p](PointView x, double y) {
            const double r = y - f(x);
            if (r == 0.0) return 0.0;
            return p * std::pow(std::abs(r), p - 1.0) * (r > 0.0 ? 1.0 : -1.0);
        };
    }
    return spec;
}

inline LossSpec lp_loss(const Target& target, double p) {
    LossSpec spec = lp_loss(target.fn, p);
    spec.target_kinks = target.kinks;
    return spec;
}

inline double error_functional(const std::function<double(PointView)>& eval,
                               const LossSpec& loss, const Measure& m,
                               const VolumeRule& rule) {
    return error_functional(eval, loss.pointwise, m, rule);
}

// ----------------------------------------------------------------------------
// Numeric plumbing shared by the audit and the optimizers
// ----------------------------------------------------------------------------

namespace detail {

template <class F>
std::pair<double, double> golden_min(F&& f, double lo, double hi, int iters = 80) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    const double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

} // namespace detail

// ----------------------------------------------------------------------------
// Loss audit
// ----------------------------------------------------------------------------

/// Spot checks of the structural loss assumptions at sampled points of the
/// domain: midpoint strict convexity on a y-grid, coercivity along +/-10^k,
/// and minimum existence via a golden-section probe. Report-only.
struct LossAuditReport {
    struct Violation {
        Vec x;
        std::string check; // "convexity", "strict-convexity", "coercivity", "attains-minimum"
        std::string detail;
    };
    std::vector<Violation> violations;

    bool clean() const { return violations.empty(); }

    bool strict_convexity_clean() const {
        for (const auto& v : violations)
            if (v.check == "convexity" || v.check == "strict-convexity") return false;
        return true;
    }
};

inline LossAuditReport loss_audit(const LossSpec& loss, const Measure& m, std::size_t samples,
                                  std::uint64_t seed = 0x10552u) {
    LossAuditReport report;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Vec grid = {-8, -5, -3, -2, -1, -0.5, -0.25, 0, 0.25, 0.5, 1, 2, 3, 5, 8};

    Vec x(m.domain.dim());
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = m.domain.lower[i] + (m.domain.upper[i] - m.domain.lower[i]) * unit(rng);

        bool convexity_flagged = false;
        for (std::size_t i = 0; i < grid.size() && !convexity_flagged; ++i) {
            for (std::size_t j = i + 1; j < grid.size() && !convexity_flagged; ++j) {
                const double mid = loss(x, 0.5 * (grid[i] + grid[j]));
                const double avg = 0.5 * (loss(x, grid[i]) + loss(x, grid[j]));
                const double tol = 1e-12 * (1.0 + std::abs(avg));
                if (mid > avg + tol) {
                    report.violations.push_back(
                        {x, "convexity",
                         "midpoint exceeds chord at y in {" + format_double(grid[i]) + ", " +
                             format_double(grid[j]) + "}"});
                    convexity_flagged = true;
                } else if (mid >= avg - tol) {
                    report.violations.push_back(
                        {x, "strict-convexity",
                         "midpoint equals chord at y in {" + format_double(grid[i]) + ", " +
                             format_double(grid[j]) + "}"});
                    convexity_flagged = true;
                }
            }
        }

        for (double sign : {1.0, -1.0}) {
            double prev = loss(x, sign * 10.0);
            for (double mag : {100.0, 1000.0}) {
                const double cur = loss(x, sign * mag);
                if (cur <= prev) {
                    report.violations.push_back(
                        {x, "coercivity",
                         std::string("loss not increasing toward y = ") +
                             (sign > 0 ? "+inf" : "-inf")});
                    break;
                }
                prev = cur;
            }
        }

        const auto [ystar, vstar] = detail::golden_min(
            [&](double y) { return loss(x, y); }, -1000.0, 1000.0, 90);
        // A bracket endpoint at least as good as the probe minimum means the
        // infimum sits at (or beyond) the edge.
        bool edge_at_least_as_good = false;
        for (double ye : {-1000.0, 1000.0}) {
            const double ve = loss(x, ye);
            if (std::isfinite(ve) && ve <= vstar + 1e-12) edge_at_least_as_good = true;
        }
        if (std::abs(ystar) > 999.0 || edge_at_least_as_good)
            report.violations.push_back(
                {x, "attains-minimum", "golden-section probe ran to the bracket edge"});
    }
    return report;
}

/// Best constant response under the loss: 1-d golden-section over the constant
/// value, integrated exactly across target kinks.
inline std::pair<double, double> best_constant(const LossSpec& loss, const Measure& m,
                                               std::size_t nodes_per_axis = 32) {
    auto err_of = [&](double c) {
        return error_functional_piecewise([c](PointView) { return c; }, loss.pointwise, m,
                                          loss.target_kinks, nodes_per_axis);
    };
    double lo = -100.0, hi = 100.0;
    if (loss.target) {
        double tmin = std::numeric_limits<double>::infinity();
        double tmax = -std::numeric_limits<double>::infinity();
        detail::for_each_piecewise_node(m.domain, loss.target_kinks, 16, [&](PointView x, double) {
            const double v = loss.target(x);
            tmin = std::min(tmin, v);
            tmax = std::max(tmax, v);
        });
        lo = tmin - 1.0;
        hi = tmax + 1.0;
    }
    return detail::golden_min(err_of, lo, hi, 90);
}

} // namespace relab

#endif // RELAB_LOSS_HPP
