#ifndef RELAB_QUADRATURE_HPP
#define RELAB_QUADRATURE_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "relab/common.hpp"
#include "relab/geometry.hpp"

namespace relab {

using ScalarField = std::function<double(PointView)>;

// ----------------------------------------------------------------------------
// Measures with continuous densities on boxes
// ----------------------------------------------------------------------------

struct Measure {
    BoxDomain domain;
    ScalarField density;
    std::string density_name; // registry key, informational

    double density_at(PointView x) const { return density(x); }
};

/// Normalized constant density 1/vol(box).
inline Measure uniform_measure(BoxDomain box) {
    const double h = 1.0 / box.volume();
    return Measure{std::move(box), [h](PointView) { return h; }, "uniform"};
}

/// Axis-aligned Gaussian restricted to the box and renormalized to mass 1.
inline Measure truncated_gaussian_measure(BoxDomain box, Vec center, double sigma) {
    if (center.size() != box.dim())
        throw InvalidArgument("truncated_gaussian_measure: center dim mismatch");
    if (!(sigma > 0.0)) throw InvalidArgument("truncated_gaussian_measure: sigma must be > 0");
    const double sqrt2 = std::sqrt(2.0);
    double mass = 1.0;
    for (std::size_t i = 0; i < box.dim(); ++i) {
        const double a = (box.lower[i] - center[i]) / (sigma * sqrt2);
        const double b = (box.upper[i] - center[i]) / (sigma * sqrt2);
        mass *= sigma * std::sqrt(std::acos(-1.0) / 2.0) * (std::erf(b) - std::erf(a));
    }
    auto h = [center, sigma, mass](PointView x) {
        double e = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - center[i];
            e += d * d;
        }
        return std::exp(-e / (2.0 * sigma * sigma)) / mass;
    };
    return Measure{std::move(box), std::move(h), "truncated-gaussian"};
}

/// Smooth compactly supported bump, peak value 1 at the center.
inline Measure bump_measure(BoxDomain box, Vec center, double radius) {
    if (center.size() != box.dim()) throw InvalidArgument("bump_measure: center dim mismatch");
    if (!(radius > 0.0)) throw InvalidArgument("bump_measure: radius must be > 0");
    auto h = [center, radius](PointView x) {
        double e = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = (x[i] - center[i]) / radius;
            e += d * d;
        }
        if (e >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - e));
    };
    return Measure{std::move(box), std::move(h), "bump"};
}

// ----------------------------------------------------------------------------
// Rules
// ----------------------------------------------------------------------------

struct VolumeRule {
    enum class Kind { tensor_gauss, midpoint, monte_carlo };
    Kind kind = Kind::tensor_gauss;
    std::size_t resolution = 64; // points per axis, or sample count for MC
    std::uint64_t seed = 0;      // Monte Carlo only
};

struct SurfaceRule {
    std::size_t resolution = 256; // points per axis on the chart
};

/// Default tensor resolution: 256 per axis up to two dimensions, 64 in three.
inline VolumeRule default_volume_rule(std::size_t d_in) {
    return VolumeRule{VolumeRule::Kind::tensor_gauss, d_in <= 2 ? 256u : 64u, 0};
}

struct IntegrationResult {
    double value = 0.0;
    double err_estimate = 0.0;
};

// ----------------------------------------------------------------------------
// Gauss-Legendre nodes (Newton iteration on the Legendre recurrence)
// ----------------------------------------------------------------------------

inline std::pair<Vec, Vec> gauss_legendre_rule(std::size_t n) {
    if (n == 0) throw InvalidArgument("gauss_legendre_rule: n must be positive");
    Vec x(n), w(n);
    const double pi = std::acos(-1.0);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - static_cast<double>(j) * p2) /
                     (static_cast<double>(j) + 1.0);
            }
            pp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    if (n % 2 == 1) x[n / 2] = 0.0;
    return {std::move(x), std::move(w)};
}

namespace detail {

/// Per-axis nodes/weights on [a, b].
inline void axis_nodes(VolumeRule::Kind kind, std::size_t n, double a, double b, Vec& nodes,
                       Vec& weights) {
    nodes.resize(n);
    weights.resize(n);
    if (kind == VolumeRule::Kind::midpoint) {
        const double h = (b - a) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            nodes[i] = a + (static_cast<double>(i) + 0.5) * h;
            weights[i] = h;
        }
    } else {
        auto [x, w] = gauss_legendre_rule(n);
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t i = 0; i < n; ++i) {
            nodes[i] = mid + half * x[i];
            weights[i] = half * w[i];
        }
    }
}

template <class F>
void tensor_iterate(const std::vector<Vec>& nodes, const std::vector<Vec>& weights, F&& visit) {
    const std::size_t d = nodes.size();
    std::vector<std::size_t> idx(d, 0);
    Vec x(d);
    for (;;) {
        double w = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            x[i] = nodes[i][idx[i]];
            w *= weights[i][idx[i]];
        }
        visit(PointView(x), w);
        std::size_t k = 0;
        while (k < d && ++idx[k] == nodes[k].size()) {
            idx[k] = 0;
            ++k;
        }
        if (k == d) break;
    }
}

template <class F>
void for_each_tensor_node(const BoxDomain& box, VolumeRule::Kind kind, std::size_t res,
                          F&& visit) {
    if (kind == VolumeRule::Kind::monte_carlo)
        throw InvalidArgument("for_each_tensor_node: not a tensor rule");
    if (res < 2) throw InvalidArgument("tensor rules need resolution >= 2 per axis");
    std::vector<Vec> nodes(box.dim()), weights(box.dim());
    for (std::size_t i = 0; i < box.dim(); ++i)
        axis_nodes(kind, res, box.lower[i], box.upper[i], nodes[i], weights[i]);
    tensor_iterate(nodes, weights, visit);
}

/// Fixed design of seeded uniform points with equal weights vol/n.
template <class F>
void for_each_monte_carlo_node(const BoxDomain& box, std::size_t n, std::uint64_t seed,
                               F&& visit) {
    if (n == 0) throw InvalidArgument("monte carlo rules need a positive sample count");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double w = box.volume() / static_cast<double>(n);
    Vec x(box.dim());
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * unit(rng);
        visit(PointView(x), w);
    }
}

/// Gauss nodes over [a, b] split at the interior cut points.
template <class F>
void piecewise_axis_iterate(double a, double b, const Vec& cuts, std::size_t n, F&& visit) {
    Vec edges{a};
    for (double c : cuts)
        if (c > a + 1e-13 && c < b - 1e-13) edges.push_back(c);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    Vec nodes, weights;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        if (edges[p + 1] - edges[p] <= 1e-14) continue;
        axis_nodes(VolumeRule::Kind::tensor_gauss, n, edges[p], edges[p + 1], nodes, weights);
        for (std::size_t i = 0; i < n; ++i) visit(nodes[i], weights[i]);
    }
}

/// Visit quadrature nodes of a subdivision of the box that is exact across the
/// given breaklines (d <= 2: cell-by-cell Gauss; d = 3: high-resolution
/// midpoint fallback). Weights sum to vol(box).
template <class F>
void for_each_piecewise_node(const BoxDomain& box, const std::vector<HalfSpace>& lines,
                             std::size_t nodes_per_axis, F&& visit) {
    const std::size_t d = box.dim();
    const std::size_t n = std::max<std::size_t>(nodes_per_axis, 2);
    if (d == 1) {
        Vec cuts;
        for (const auto& l : lines) cuts.push_back(l.offset / l.normal[0]);
        std::sort(cuts.begin(), cuts.end());
        piecewise_axis_iterate(box.lower[0], box.upper[0], cuts, n, [&](double x, double w) {
            const double p[1] = {x};
            visit(PointView(p, 1), w);
        });
        return;
    }
    if (d == 2) {
        // Vertical decomposition: strip boundaries at line/line and line/edge
        // crossings, then per x-node split the y-range at line crossings.
        Vec xcuts;
        for (const auto& l : lines) {
            const double nx = l.normal[0], ny = l.normal[1];
            if (std::abs(ny) <= 1e-12) {
                xcuts.push_back(l.offset / nx);
            } else if (std::abs(nx) > 1e-12) {
                xcuts.push_back((l.offset - ny * box.lower[1]) / nx);
                xcuts.push_back((l.offset - ny * box.upper[1]) / nx);
            }
        }
        for (std::size_t i = 0; i < lines.size(); ++i) {
            for (std::size_t j = i + 1; j < lines.size(); ++j) {
                const double a1 = lines[i].normal[0], b1 = lines[i].normal[1];
                const double a2 = lines[j].normal[0], b2 = lines[j].normal[1];
                const double det = a1 * b2 - b1 * a2;
                if (std::abs(det) > 1e-12)
                    xcuts.push_back((lines[i].offset * b2 - lines[j].offset * b1) / det);
            }
        }
        std::sort(xcuts.begin(), xcuts.end());
        piecewise_axis_iterate(box.lower[0], box.upper[0], xcuts, n, [&](double x, double wx) {
            Vec ycuts;
            for (const auto& l : lines) {
                const double ny = l.normal[1];
                if (std::abs(ny) > 1e-12) ycuts.push_back((l.offset - l.normal[0] * x) / ny);
            }
            std::sort(ycuts.begin(), ycuts.end());
            piecewise_axis_iterate(box.lower[1], box.upper[1], ycuts, n,
                                   [&](double y, double wy) {
                                       const double p[2] = {x, y};
                                       visit(PointView(p, 2), wx * wy);
                                   });
        });
        return;
    }
    for_each_tensor_node(box, VolumeRule::Kind::midpoint, std::max<std::size_t>(n, 64), visit);
}

} // namespace detail

// ----------------------------------------------------------------------------
// Volume integration
// ----------------------------------------------------------------------------

/// Approximates the integral of f against the measure. The error estimate
/// comes from comparing with a halved resolution (tensor rules) or the sample
/// standard error (Monte Carlo).
template <class F>
IntegrationResult integrate_volume(F&& f, const Measure& m, const VolumeRule& rule) {
    auto weighted = [&](std::size_t res) {
        KahanSum acc;
        detail::for_each_tensor_node(m.domain, rule.kind, res, [&](PointView x, double w) {
            const double fx = f(x);
            const double hx = m.density_at(x);
            if (!std::isfinite(fx) || !std::isfinite(hx))
                throw NonFiniteIntegrand("integrate_volume: non-finite integrand or density");
            acc.add(w * fx * hx);
        });
        return acc.value();
    };

    if (rule.kind == VolumeRule::Kind::monte_carlo) {
        const std::size_t n = std::max<std::size_t>(rule.resolution, 2);
        std::mt19937_64 rng(rule.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Vec x(m.domain.dim());
        KahanSum acc, acc2;
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] = m.domain.lower[i] + (m.domain.upper[i] - m.domain.lower[i]) * unit(rng);
            const double g = f(PointView(x)) * m.density_at(x);
            if (!std::isfinite(g))
                throw NonFiniteIntegrand("integrate_volume: non-finite integrand or density");
            acc.add(g);
            acc2.add(g * g);
        }
        const double vol = m.domain.volume();
        const double mean = acc.value() / static_cast<double>(n);
        const double var =
            std::max(0.0, acc2.value() / static_cast<double>(n) - mean * mean);
        return {vol * mean, vol * std::sqrt(var / static_cast<double>(n))};
    }

    if (rule.resolution < 2)
        throw InvalidArgument("tensor rules need resolution >= 2 per axis");
    const double fine = weighted(rule.resolution);
    const double coarse = weighted(std::max<std::size_t>(2, rule.resolution / 2));
    return {fine, std::abs(fine - coarse)};
}

/// Integral of f over the box, exact across the given breaklines for smooth
/// pieces (d_in <= 2). Intended for piecewise integrands whose kink/jump set
/// is known.
template <class F>
IntegrationResult integrate_volume_piecewise(F&& f, const Measure& m,
                                             const std::vector<HalfSpace>& lines,
                                             std::size_t nodes_per_axis) {
    auto weighted = [&](std::size_t n) {
        KahanSum acc;
        detail::for_each_piecewise_node(m.domain, lines, n, [&](PointView x, double w) {
            const double fx = f(x);
            const double hx = m.density_at(x);
            if (!std::isfinite(fx) || !std::isfinite(hx))
                throw NonFiniteIntegrand("integrate_volume_piecewise: non-finite integrand");
            acc.add(w * fx * hx);
        });
        return acc.value();
    };
    const double fine = weighted(nodes_per_axis);
    const double coarse = weighted(std::max<std::size_t>(2, nodes_per_axis / 2));
    return {fine, std::abs(fine - coarse)};
}

// ----------------------------------------------------------------------------
// Surface integration over hyperplane sections
// ----------------------------------------------------------------------------

/// Integral of f against the (d_in - 1)-dimensional Hausdorff measure weighted
/// by the density, over boundary(plane) within the box. For d_in = 1 this is a
/// point evaluation f(x0) h(x0).
template <class F>
double integrate_surface(F&& f, const HalfSpace& plane, const Measure& m,
                         const SurfaceRule& rule) {
    if (rule.resolution < 2) throw InvalidArgument("SurfaceRule: resolution >= 2 required");
    const SurfacePatch patch = hyperplane_patch(plane, m.domain);
    const std::size_t sdim = patch.surface_dim();

    if (sdim == 0) return f(PointView(patch.origin)) * m.density_at(patch.origin);

    if (sdim == 1) {
        // Exact clip of the chart line against the box, then Gauss.
        double lo = patch.param_lower[0], hi = patch.param_upper[0];
        for (std::size_t i = 0; i < m.domain.dim(); ++i) {
            const double dir = patch.tangents[0][i];
            const double org = patch.origin[i];
            if (std::abs(dir) <= 1e-15) {
                if (org < m.domain.lower[i] - 1e-12 || org > m.domain.upper[i] + 1e-12)
                    return 0.0;
                continue;
            }
            const double ta = (m.domain.lower[i] - org) / dir;
            const double tb = (m.domain.upper[i] - org) / dir;
            lo = std::max(lo, std::min(ta, tb));
            hi = std::min(hi, std::max(ta, tb));
        }
        if (hi <= lo) return 0.0;
        Vec nodes, weights;
        detail::axis_nodes(VolumeRule::Kind::tensor_gauss, rule.resolution, lo, hi, nodes,
                           weights);
        KahanSum acc;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const double t[1] = {nodes[i]};
            const Vec x = patch.point_at(PointView(t, 1));
            acc.add(weights[i] * f(PointView(x)) * m.density_at(x));
        }
        return acc.value();
    }

    // sdim == 2: midpoint grid on the chart with a box-membership indicator.
    Vec tn0, tw0, tn1, tw1;
    detail::axis_nodes(VolumeRule::Kind::midpoint, rule.resolution, patch.param_lower[0],
                       patch.param_upper[0], tn0, tw0);
    detail::axis_nodes(VolumeRule::Kind::midpoint, rule.resolution, patch.param_lower[1],
                       patch.param_upper[1], tn1, tw1);
    KahanSum acc;
    for (std::size_t i = 0; i < tn0.size(); ++i) {
        for (std::size_t j = 0; j < tn1.size(); ++j) {
            const double t[2] = {tn0[i], tn1[j]};
            const Vec x = patch.point_at(PointView(t, 2));
            if (!m.domain.contains(x, 1e-12)) continue;
            acc.add(tw0[i] * tw1[j] * f(PointView(x)) * m.density_at(x));
        }
    }
    return acc.value();
}

// ----------------------------------------------------------------------------
// Error functional and slab masses
// ----------------------------------------------------------------------------

/// err(eval) = integral of L(x, eval(x)) d mu.
template <class EvalFn, class LossFn>
double error_functional(EvalFn&& eval, LossFn&& loss, const Measure& m,
                        const VolumeRule& rule) {
    return integrate_volume([&](PointView x) { return loss(x, eval(x)); }, m, rule).value;
}

/// Same, with exact subdivision across the given breaklines (d_in <= 2).
template <class EvalFn, class LossFn>
double error_functional_piecewise(EvalFn&& eval, LossFn&& loss, const Measure& m,
                                  const std::vector<HalfSpace>& lines,
                                  std::size_t nodes_per_axis = 24) {
    KahanSum acc;
    detail::for_each_piecewise_node(m.domain, lines, nodes_per_axis,
                                    [&](PointView x, double w) {
                                        const double v = loss(x, eval(x));
                                        const double hx = m.density_at(x);
                                        if (!std::isfinite(v) || !std::isfinite(hx))
                                            throw NonFiniteIntegrand(
                                                "error_functional_piecewise: non-finite value");
                                        acc.add(w * v * hx);
                                    });
    return acc.value();
}

/// mu(slab of half-width eps around the boundary of `plane`) for each width.
/// Used to check the linear decay of hyperplane neighborhoods.
inline Vec hyperplane_mass(const HalfSpace& plane, const Measure& m, const Vec& widths) {
    Vec out(widths.size(), 0.0);

    SurfacePatch patch;
    bool have_patch = true;
    try {
        patch = hyperplane_patch(plane, m.domain);
    } catch (const NoIntersection&) {
        have_patch = false;
    }

    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
        const double eps = widths[wi];
        if (!(eps > 0.0)) continue;

        if (!have_patch) {
            // Hyperplane misses the open box; the slab may still clip a corner.
            const auto r = integrate_volume(
                [&](PointView x) {
                    return std::abs(plane.signed_distance(x)) <= eps ? 1.0 : 0.0;
                },
                m, VolumeRule{VolumeRule::Kind::midpoint, 128, 0});
            out[wi] = r.value;
            continue;
        }

        const std::size_t sdim = patch.surface_dim();
        Vec sn, sw;
        detail::axis_nodes(VolumeRule::Kind::tensor_gauss, 16, -eps, eps, sn, sw);
        KahanSum acc;
        auto accumulate_at = [&](const Vec& base, double wt) {
            for (std::size_t si = 0; si < sn.size(); ++si) {
                Vec p = base;
                add_scaled(p, plane.normal.view(), sn[si]);
                if (!m.domain.contains(p, 0.0)) continue;
                acc.add(wt * sw[si] * m.density_at(p));
            }
        };
        if (sdim == 0) {
            accumulate_at(patch.origin, 1.0);
        } else if (sdim == 1) {
            Vec tn, tw;
            detail::axis_nodes(VolumeRule::Kind::midpoint, 2048, patch.param_lower[0],
                               patch.param_upper[0], tn, tw);
            for (std::size_t i = 0; i < tn.size(); ++i) {
                const double t[1] = {tn[i]};
                accumulate_at(patch.point_at(PointView(t, 1)), tw[i]);
            }
        } else {
            Vec tn0, tw0, tn1, tw1;
            detail::axis_nodes(VolumeRule::Kind::midpoint, 128, patch.param_lower[0],
                               patch.param_upper[0], tn0, tw0);
            detail::axis_nodes(VolumeRule::Kind::midpoint, 128, patch.param_lower[1],
                               patch.param_upper[1], tn1, tw1);
            for (std::size_t i = 0; i < tn0.size(); ++i) {
                for (std::size_t j = 0; j < tn1.size(); ++j) {
                    const double t[2] = {tn0[i], tn1[j]};
                    accumulate_at(patch.point_at(PointView(t, 2)), tw0[i] * tw1[j]);
                }
            }
        }
        out[wi] = acc.value();
    }
    return out;
}

} // namespace relab

#endif // RELAB_QUADRATURE_HPP
