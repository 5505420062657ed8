#ifndef RELAB_CLOSURE_HPP
#define RELAB_CLOSURE_HPP

#include <algorithm>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "relab/common.hpp"
#include "relab/linalg.hpp"
#include "relab/loss.hpp"
#include "relab/quadrature.hpp"
#include "relab/response.hpp"

namespace relab {

// ----------------------------------------------------------------------------
// Side switching and jump-normal dependences
// ----------------------------------------------------------------------------

/// Rewrite summand j over the opposite half-space via
///   1_A (d.x + b) = (d.x + b) - 1_{A'} (d.x + b)
/// with A' the opposite open half-space. Evaluations change only on the
/// boundary hyperplane. The case tag is re-derived when the rewrite breaks it.
inline GeneralizedResponse switch_sides(const GeneralizedResponse& r, std::size_t j) {
    if (j >= r.summands.size())
        throw IndexOutOfRange("switch_sides: summand index out of range");
    GeneralizedResponse out = r;
    auto& s = out.summands[j];
    add_scaled(out.affine_linear, s.delta, 1.0);
    out.affine_const += s.jump;
    s.halfspace = s.halfspace.opposite();
    s.delta = negated(s.delta);
    s.jump = -s.jump;
    if (!detail::case_status(out).holds(out.case_tag)) detail::retag_cheapest(out);
    return out;
}

/// Positive coefficients on a minimal set of multiplicity-2 summands whose
/// jump normals cancel: sum over the support of alpha_j * n_j = 0.
struct DependenceVector {
    std::vector<std::size_t> support; // summand indices, ascending
    Vec alphas;                       // aligned with support, all > 0, max = 1
};

/// find_dependence normalizes the response (sides switched until every
/// coefficient is positive), so it returns the adjusted response as well.
struct FindDependenceResult {
    GeneralizedResponse response;
    DependenceVector dependence;
};

inline std::optional<FindDependenceResult> find_dependence(const GeneralizedResponse& r) {
    ensure_valid(r);

    std::vector<std::size_t> support;
    for (std::size_t k = 0; k < r.summands.size(); ++k)
        if (r.summands[k].multiplicity == 2) support.push_back(k);
    if (support.empty()) return std::nullopt;

    auto normals_of = [&](const GeneralizedResponse& resp,
                          const std::vector<std::size_t>& idx) {
        std::vector<Vec> cols;
        for (std::size_t k : idx) cols.push_back(resp.summands[k].halfspace.normal.components());
        return cols;
    };
    if (!linalg::columns_dependent(normals_of(r, support), kRankSvTol)) return std::nullopt;

    // Prune to a minimal dependent support.
    bool shrunk = true;
    while (shrunk) {
        shrunk = false;
        for (std::size_t p = 0; p < support.size(); ++p) {
            std::vector<std::size_t> trial = support;
            trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(p));
            if (linalg::columns_dependent(normals_of(r, trial), kRankSvTol)) {
                support = std::move(trial);
                shrunk = true;
                break;
            }
        }
    }

    Vec alpha = linalg::null_coefficients(normals_of(r, support));
    GeneralizedResponse adjusted = r;
    for (std::size_t p = 0; p < alpha.size(); ++p) {
        if (std::abs(alpha[p]) < 1e-12)
            throw Error("find_dependence: zero coefficient on a minimal support");
        if (alpha[p] < 0.0) {
            adjusted = switch_sides(adjusted, support[p]);
            alpha[p] = -alpha[p];
        }
    }
    const double amax = norm_inf(alpha);
    for (double& a : alpha) a /= amax;
    return FindDependenceResult{std::move(adjusted), {std::move(support), std::move(alpha)}};
}

// ----------------------------------------------------------------------------
// Split representation
// ----------------------------------------------------------------------------

/// Two-sided representation of the supported summands:
///   R(x) = bias + sum_j [ 1_{A_j}(delta_j^+ . x + b_j^+)
///                         + 1_{A_j^c}(delta_j^- . x + b_j^-) ] + (other summands),
/// with delta^+ - delta^- = delta and b^+ - b^- = jump. The canonical choice
/// puts the jump data on the plus side; a nonconstant affine part is parked on
/// the minus side of the first supported summand so that the reconstruction
/// identity holds: bias + sum_j (delta_j^- . x + b_j^-) = affine(x).
struct SplitParts {
    struct Part {
        Vec delta_plus;
        Vec delta_minus;
        double b_plus = 0.0;
        double b_minus = 0.0;
    };
    std::vector<Part> parts; // aligned with the dependence support
    double bias = 0.0;
};

/// Value of the split representation (plus branch strictly inside, minus
/// branch elsewhere), including non-supported summands.
inline double eval_split_form(const GeneralizedResponse& r, const DependenceVector& dep,
                              const SplitParts& sp, PointView x) {
    KahanSum acc;
    acc.add(sp.bias);
    std::vector<bool> in_support(r.summands.size(), false);
    for (std::size_t k : dep.support) in_support[k] = true;
    for (std::size_t p = 0; p < dep.support.size(); ++p) {
        const auto& s = r.summands[dep.support[p]];
        const auto& part = sp.parts[p];
        if (side(s.halfspace, x) == Side::inside)
            acc.add(dot(part.delta_plus, x) + part.b_plus);
        else
            acc.add(dot(part.delta_minus, x) + part.b_minus);
    }
    for (std::size_t k = 0; k < r.summands.size(); ++k) {
        if (in_support[k]) continue;
        const auto& s = r.summands[k];
        if (side(s.halfspace, x) == Side::inside) acc.add(dot(s.delta, x) + s.jump);
    }
    return acc.value();
}

inline SplitParts make_splits(const GeneralizedResponse& r, const DependenceVector& dep) {
    if (dep.support.empty()) throw InvalidArgument("make_splits: empty support");
    for (std::size_t k : dep.support)
        if (k >= r.summands.size()) throw IndexOutOfRange("make_splits: support index");

    const std::size_t d_in = r.input_dim();
    SplitParts sp;
    sp.bias = r.affine_const;
    for (std::size_t k : dep.support) {
        SplitParts::Part part;
        part.delta_plus = r.summands[k].delta;
        part.delta_minus.assign(d_in, 0.0);
        part.b_plus = r.summands[k].jump;
        part.b_minus = 0.0;
        sp.parts.push_back(std::move(part));
    }
    if (norm_inf(r.affine_linear) > 0.0) {
        add_scaled(sp.parts[0].delta_minus, r.affine_linear, 1.0);
        add_scaled(sp.parts[0].delta_plus, r.affine_linear, 1.0);
    }

    // Numeric reconstruction check at random off-boundary points.
    std::mt19937_64 rng(0xC0FFEEu);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    Vec x(d_in);
    for (int trial = 0; trial < 100; ++trial) {
        bool clear = true;
        do {
            clear = true;
            for (double& c : x) c = unit(rng);
            for (const auto& s : r.summands)
                if (std::abs(s.halfspace.signed_distance(x)) < 1e-9) clear = false;
        } while (!clear);
        const double direct = eval_generalized(r, x);
        const double split = eval_split_form(r, dep, sp, x);
        if (std::abs(direct - split) > 1e-10)
            throw ReconstructionFailed("make_splits: split representation mismatch of " +
                                       format_double(std::abs(direct - split)));
    }
    return sp;
}

// ----------------------------------------------------------------------------
// Finite-kappa perturbation
// ----------------------------------------------------------------------------

/// Smallest slope making every hinge argument of the perturbation dominated by
/// the kappa term over the domain.
inline double kappa_lower_bound(const DependenceVector& dep, const SplitParts& sp,
                                const BoxDomain& domain) {
    double bound = 0.0;
    const double diam = domain.diameter();
    for (std::size_t p = 0; p < sp.parts.size(); ++p) {
        const auto& part = sp.parts[p];
        const double a = dep.alphas[p];
        bound = std::max(bound, (norm2(part.delta_plus) + std::abs(part.b_plus) / diam) / a);
        bound = std::max(bound, (norm2(part.delta_minus) + std::abs(part.b_minus) / diam) / a);
    }
    return bound;
}

/// Representable replacement: each supported summand becomes the hinge pair
///   (delta^+ . x + b^+ + kappa alpha (n.x - o))^+
///     - (-delta^- . x - b^- - kappa alpha (n.x - o))^+,
/// with the bias shifted by kappa sum alpha_j o_j; `direction` = -1 builds the
/// mirrored replacement. Equals the response outside slabs of width O(1/kappa)
/// around the supported breaklines. Continuous non-supported summands are kept
/// as single ReLU units.
inline EffectiveTuple kappa_perturb(const GeneralizedResponse& r, const DependenceVector& dep,
                                    const SplitParts& sp, double kappa, int direction,
                                    const BoxDomain& domain) {
    if (direction != 1 && direction != -1)
        throw InvalidArgument("kappa_perturb: direction must be +1 or -1");
    const double kmin = kappa_lower_bound(dep, sp, domain);
    if (!(kappa > kmin))
        throw KappaTooSmall("kappa_perturb: kappa must exceed " + format_double(kmin));

    NetworkConfig cfg;
    const double s = static_cast<double>(direction);
    double bias = sp.bias;
    for (std::size_t p = 0; p < dep.support.size(); ++p) {
        const auto& sm = r.summands[dep.support[p]];
        const auto& part = sp.parts[p];
        const double a = dep.alphas[p];
        const Vec& n = sm.halfspace.normal.components();
        const double o = sm.halfspace.offset;

        Vec w_plus = scaled(part.delta_plus, s);
        add_scaled(w_plus, n, kappa * a);
        cfg.W1.push_back(std::move(w_plus));
        cfg.b1.push_back(s * part.b_plus - kappa * a * o);
        cfg.W2.push_back(s);

        Vec w_minus = scaled(part.delta_minus, -s);
        add_scaled(w_minus, n, -kappa * a);
        cfg.W1.push_back(std::move(w_minus));
        cfg.b1.push_back(-s * part.b_minus + kappa * a * o);
        cfg.W2.push_back(-s);

        bias += s * kappa * a * o;
    }

    std::vector<bool> in_support(r.summands.size(), false);
    for (std::size_t k : dep.support) in_support[k] = true;
    for (std::size_t k = 0; k < r.summands.size(); ++k) {
        if (in_support[k]) continue;
        const auto& sm = r.summands[k];
        if (!detail::boundary_containment(sm.halfspace, sm.delta, sm.jump))
            throw Error("kappa_perturb: non-supported discontinuous summand");
        cfg.W1.push_back(sm.halfspace.normal.components());
        cfg.b1.push_back(-sm.halfspace.offset);
        cfg.W2.push_back(dot(sm.halfspace.normal.view(), sm.delta));
    }
    cfg.b2 = bias;
    return to_effective(cfg);
}

// ----------------------------------------------------------------------------
// Breakline segment data
// ----------------------------------------------------------------------------

struct QValues {
    double q_plus = 0.0;
    double q_minus = 0.0;
    double total() const { return q_plus + q_minus; }
};

namespace detail {

inline std::size_t support_position(const DependenceVector& dep, std::size_t j) {
    for (std::size_t p = 0; p < dep.support.size(); ++p)
        if (dep.support[p] == j) return p;
    throw InvalidArgument("summand " + std::to_string(j) + " is not in the support");
}

} // namespace detail

/// Limiting normal-segment lengths of the perturbation slab at x' on the
/// breakline of summand j: with t_± = -(delta^± . x' + b^±)/alpha_j and
/// S = [min(t_-, t_+), max(t_-, t_+)],
///   q_plus = |S ∩ [0, inf)|,  q_minus = |S ∩ (-inf, 0]|.
inline QValues q_values(const GeneralizedResponse& r, std::size_t j, PointView xprime,
                        const DependenceVector& dep, const SplitParts& sp) {
    const std::size_t p = detail::support_position(dep, j);
    if (std::abs(r.summands[j].halfspace.signed_distance(xprime)) >= 1e-10)
        throw OffBreakline("q_values: point not on the breakline of summand " +
                           std::to_string(j));
    const auto& part = sp.parts[p];
    const double a = dep.alphas[p];
    const double t_plus = -(dot(part.delta_plus, xprime) + part.b_plus) / a;
    const double t_minus = -(dot(part.delta_minus, xprime) + part.b_minus) / a;
    const double lo = std::min(t_plus, t_minus);
    const double hi = std::max(t_plus, t_minus);
    QValues q;
    q.q_plus = std::max(0.0, hi - std::max(lo, 0.0));
    q.q_minus = std::max(0.0, std::min(hi, 0.0) - lo);
    return q;
}

struct SegmentLoss {
    double l_bar = 0.0;
    double l_plus = 0.0;
    double l_minus = 0.0;
};

/// Endpoint losses and segment-averaged loss at x' on the breakline of
/// summand j. The off-summand value collects the remaining split terms and
/// any non-supported summands.
inline SegmentLoss segment_average_loss(const LossSpec& loss, PointView xprime,
                                        const GeneralizedResponse& r, std::size_t j,
                                        const DependenceVector& dep, const SplitParts& sp,
                                        std::size_t quad_points = 64) {
    const std::size_t p = detail::support_position(dep, j);
    if (std::abs(r.summands[j].halfspace.signed_distance(xprime)) >= 1e-10)
        throw OffBreakline("segment_average_loss: point not on the breakline");

    std::vector<bool> in_support(r.summands.size(), false);
    for (std::size_t k : dep.support) in_support[k] = true;

    KahanSum rest_acc;
    rest_acc.add(sp.bias);
    for (std::size_t q = 0; q < dep.support.size(); ++q) {
        if (q == p) continue;
        const auto& s = r.summands[dep.support[q]];
        const auto& part = sp.parts[q];
        if (side(s.halfspace, xprime) == Side::inside)
            rest_acc.add(dot(part.delta_plus, xprime) + part.b_plus);
        else
            rest_acc.add(dot(part.delta_minus, xprime) + part.b_minus);
    }
    for (std::size_t k = 0; k < r.summands.size(); ++k) {
        if (in_support[k]) continue;
        const auto& s = r.summands[k];
        if (side(s.halfspace, xprime) == Side::inside)
            rest_acc.add(dot(s.delta, xprime) + s.jump);
    }
    const double rest = rest_acc.value();

    const auto& part = sp.parts[p];
    const double y_plus = dot(part.delta_plus, xprime) + part.b_plus + rest;
    const double y_minus = dot(part.delta_minus, xprime) + part.b_minus + rest;

    SegmentLoss out;
    out.l_plus = loss(xprime, y_plus);
    out.l_minus = loss(xprime, y_minus);
    const double lo = std::min(y_plus, y_minus), hi = std::max(y_plus, y_minus);
    if (hi - lo == 0.0) {
        out.l_bar = out.l_plus;
        return out;
    }
    // Composite Simpson over the segment.
    std::size_t n = std::max<std::size_t>(quad_points, 2);
    if (n % 2 == 1) ++n;
    const double h = (hi - lo) / static_cast<double>(n);
    KahanSum acc;
    acc.add(loss(xprime, lo));
    acc.add(loss(xprime, hi));
    for (std::size_t i = 1; i < n; ++i)
        acc.add((i % 2 == 1 ? 4.0 : 2.0) * loss(xprime, lo + static_cast<double>(i) * h));
    out.l_bar = acc.value() * h / 3.0 / (hi - lo);
    return out;
}

// ----------------------------------------------------------------------------
// Limiting decrement and finite-kappa verification
// ----------------------------------------------------------------------------

/// Surface-quadrature evaluation of
///   sum_j int_{H_j} h(x') q_j(x') (2 Lbar_j(x') - L_j^+(x') - L_j^-(x')) dx'.
/// Nonpositive for convex losses; strictly negative when a genuine jump meets
/// positive density.
inline double limit_decrement(const GeneralizedResponse& r, const DependenceVector& dep,
                              const SplitParts& sp, const LossSpec& loss, const Measure& m,
                              const SurfaceRule& srule = {}) {
    KahanSum acc;
    for (std::size_t k : dep.support) {
        const auto& plane = r.summands[k].halfspace;
        acc.add(integrate_surface(
            [&](PointView xprime) {
                const QValues q = q_values(r, k, xprime, dep, sp);
                const SegmentLoss seg = segment_average_loss(loss, xprime, r, k, dep, sp);
                return q.total() * (2.0 * seg.l_bar - seg.l_plus - seg.l_minus);
            },
            plane, m, srule));
    }
    return acc.value();
}

struct PerturbationReport {
    Vec kappa_grid;
    double err_r = 0.0;
    Vec err_plus;
    Vec err_minus;
    Vec scaled_sum; // kappa * (err_plus + err_minus - 2 err_r)
    double decrement = 0.0;
    std::optional<double> improving_kappa;
};

/// Finite-kappa error comparison against the limiting decrement. Requires the
/// loss to pass the strict-convexity audit. A continuous response yields the
/// trivial report (decrement 0, no improvement required).
inline PerturbationReport verify_improvement(const GeneralizedResponse& r,
                                             const LossSpec& loss, const Measure& m,
                                             const Vec& kappa_grid,
                                             const SurfaceRule& srule = {}) {
    ensure_valid(r);
    if (!loss_audit(loss, m, 32).strict_convexity_clean())
        throw AuditFailed("verify_improvement: loss failed the strict-convexity audit");

    PerturbationReport report;
    report.kappa_grid = kappa_grid;

    auto err_of_response = [&](const GeneralizedResponse& resp) {
        std::vector<HalfSpace> lines = loss.target_kinks;
        for (const auto& s : resp.summands) lines.push_back(s.halfspace);
        return error_functional_piecewise(
            [&](PointView x) { return eval_generalized(resp, x); }, loss.pointwise, m, lines,
            24);
    };

    auto fd = find_dependence(r);
    if (!fd) {
        const auto [reduced, cls] = canonical_reduce(r);
        if (!cls.representable)
            throw PreconditionViolation(
                "verify_improvement: discontinuous response without a jump-normal dependence");
        report.err_r = err_of_response(r);
        report.err_plus.assign(kappa_grid.size(), report.err_r);
        report.err_minus.assign(kappa_grid.size(), report.err_r);
        report.scaled_sum.assign(kappa_grid.size(), 0.0);
        return report;
    }

    const GeneralizedResponse& adj = fd->response;
    const DependenceVector& dep = fd->dependence;
    const SplitParts sp = make_splits(adj, dep);

    report.err_r = err_of_response(adj);
    for (double kappa : kappa_grid) {
        double errs[2];
        for (int dir : {0, 1}) {
            const EffectiveTuple t =
                kappa_perturb(adj, dep, sp, kappa, dir == 0 ? 1 : -1, m.domain);
            std::vector<HalfSpace> lines = loss.target_kinks;
            for (std::size_t j = 0; j < t.neuron_count(); ++j) lines.push_back(t.activity(j));
            errs[dir] = error_functional_piecewise(
                [&](PointView x) { return eval_tuple(t, x); }, loss.pointwise, m, lines, 24);
        }
        report.err_plus.push_back(errs[0]);
        report.err_minus.push_back(errs[1]);
        report.scaled_sum.push_back(kappa * (errs[0] + errs[1] - 2.0 * report.err_r));
        if (!report.improving_kappa &&
            std::min(errs[0], errs[1]) < report.err_r - 1e-9)
            report.improving_kappa = kappa;
    }
    report.decrement = limit_decrement(adj, dep, sp, loss, m, srule);
    return report;
}

// ----------------------------------------------------------------------------
// Diverging representable families
// ----------------------------------------------------------------------------

/// Two-neuron ramp family N^t(x) = jump t (n.x - o)^+ - jump t (n.x - o - 1/t)^+.
/// Pointwise limit as t -> inf is the jump indicator of the half-space (0 on
/// the boundary); the kinks diverge linearly in t.
inline EffectiveTuple discontinuity_approximant(const HalfSpace& plane, double jump,
                                                double t) {
    if (!(t > 0.0)) throw InvalidArgument("discontinuity_approximant: t must be > 0");
    EffectiveTuple out;
    out.normals = {plane.normal, plane.normal};
    out.offsets = {plane.offset, plane.offset + 1.0 / t};
    out.kinks = {jump * t, -jump * t};
    out.bias = 0.0;
    return out;
}

} // namespace relab

#endif // RELAB_CLOSURE_HPP
