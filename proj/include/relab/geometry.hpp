#ifndef RELAB_GEOMETRY_HPP
#define RELAB_GEOMETRY_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "relab/common.hpp"

namespace relab {

inline constexpr double kBoundaryTol = 1e-12;
inline constexpr double kUnitNormTol = 1e-12;

// ----------------------------------------------------------------------------
// Basic types
// ----------------------------------------------------------------------------

/// Direction vector constrained to Euclidean norm 1 (within 1e-12).
class UnitVector {
public:
    explicit UnitVector(Vec components) : v_(std::move(components)) {
        if (v_.empty()) throw InvalidArgument("UnitVector: empty");
        if (std::abs(norm2(v_) - 1.0) > kUnitNormTol)
            throw InvalidArgument("UnitVector: norm differs from 1 by more than 1e-12");
    }

    /// Build from an arbitrary nonzero vector by rescaling.
    static UnitVector normalized(PointView raw) {
        const double n = norm2(raw);
        if (n == 0.0) throw InvalidArgument("UnitVector::normalized: zero vector");
        UnitVector u;
        u.v_.assign(raw.begin(), raw.end());
        for (double& c : u.v_) c /= n;
        return u;
    }

    /// Canonical axis direction e_k.
    static UnitVector axis(std::size_t dim, std::size_t k = 0) {
        if (k >= dim) throw InvalidArgument("UnitVector::axis: index out of range");
        UnitVector u;
        u.v_.assign(dim, 0.0);
        u.v_[k] = 1.0;
        return u;
    }

    UnitVector flipped() const {
        UnitVector u;
        u.v_ = negated(v_);
        return u;
    }

    std::size_t dim() const { return v_.size(); }
    double operator[](std::size_t i) const { return v_[i]; }
    const Vec& components() const { return v_; }
    PointView view() const { return v_; }

private:
    UnitVector() = default;
    Vec v_;
};

enum class Side { inside, boundary, outside };

/// Open half-space {x : normal.x > offset}; its boundary is {normal.x = offset}.
struct HalfSpace {
    UnitVector normal;
    double offset = 0.0;

    HalfSpace(UnitVector n, double o) : normal(std::move(n)), offset(o) {}

    std::size_t dim() const { return normal.dim(); }

    /// Signed distance of x to the boundary (positive on the inside).
    double signed_distance(PointView x) const { return dot(normal.view(), x) - offset; }

    /// Half-space on the other side of the same hyperplane.
    HalfSpace opposite() const { return HalfSpace(normal.flipped(), -offset); }
};

/// Membership classification with absolute boundary tolerance 1e-12.
inline Side side(const HalfSpace& h, PointView x) {
    const double s = h.signed_distance(x);
    if (std::abs(s) <= kBoundaryTol) return Side::boundary;
    return s > 0.0 ? Side::inside : Side::outside;
}

/// True when the two half-spaces have the same boundary hyperplane,
/// regardless of orientation.
inline bool same_hyperplane(const HalfSpace& a, const HalfSpace& b, double tol = kBoundaryTol) {
    if (a.dim() != b.dim()) return false;
    auto close = [&](const UnitVector& n, double o) {
        for (std::size_t i = 0; i < n.dim(); ++i)
            if (std::abs(n[i] - b.normal[i]) > tol) return false;
        return std::abs(o - b.offset) <= tol;
    };
    return close(a.normal, a.offset) || close(a.normal.flipped(), -a.offset);
}

/// Compact axis-aligned box, lower < upper componentwise.
struct BoxDomain {
    Vec lower;
    Vec upper;

    BoxDomain(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
        if (lower.size() != upper.size() || lower.empty())
            throw InvalidArgument("BoxDomain: inconsistent bounds");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i]))
                throw InvalidArgument("BoxDomain: lower must be < upper componentwise");
    }

    std::size_t dim() const { return lower.size(); }

    double volume() const {
        double v = 1.0;
        for (std::size_t i = 0; i < dim(); ++i) v *= upper[i] - lower[i];
        return v;
    }

    double diameter() const {
        double s = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) s += (upper[i] - lower[i]) * (upper[i] - lower[i]);
        return std::sqrt(s);
    }

    Vec center() const {
        Vec c(dim());
        for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
        return c;
    }

    bool contains(PointView x, double tol = 0.0) const {
        if (x.size() != dim()) throw DimensionMismatch("BoxDomain::contains");
        for (std::size_t i = 0; i < dim(); ++i)
            if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
        return true;
    }

    /// Corner indexed by the bits of `mask` (bit i set = upper bound on axis i).
    Vec corner(std::uint32_t mask) const {
        Vec c(dim());
        for (std::size_t i = 0; i < dim(); ++i) c[i] = (mask >> i) & 1u ? upper[i] : lower[i];
        return c;
    }

    std::uint32_t corner_count() const { return 1u << dim(); }
};

/// Inside/outside membership pattern over an ordered half-space list.
/// Identifies the open cell formed by intersecting the chosen sides.
struct CellSignature {
    std::vector<bool> membership; // true = inside

    bool operator==(const CellSignature& o) const { return membership == o.membership; }
    bool operator<(const CellSignature& o) const { return membership < o.membership; }
};

// ----------------------------------------------------------------------------
// Cell enumeration (sampling based)
// ----------------------------------------------------------------------------

struct CellEstimate {
    CellSignature signature;
    double measure = 0.0; // Lebesgue measure estimate of the cell within the box
};

namespace detail {

inline void check_pairwise_distinct(const std::vector<HalfSpace>& hs) {
    for (std::size_t i = 0; i < hs.size(); ++i)
        for (std::size_t j = i + 1; j < hs.size(); ++j)
            if (same_hyperplane(hs[i], hs[j]))
                throw DuplicateBoundary("half-spaces " + std::to_string(i) + " and " +
                                        std::to_string(j) + " share a boundary hyperplane");
}

} // namespace detail

/// Monte-Carlo enumeration of the non-empty arrangement cells inside `domain`.
/// Points landing on a boundary (within tolerance) count as outside, matching
/// the open half-space convention. Signatures with zero observed mass are
/// omitted; results are sorted by signature for determinism.
inline std::vector<CellEstimate> enumerate_cells(const std::vector<HalfSpace>& halfspaces,
                                                 const BoxDomain& domain, std::size_t samples,
                                                 std::uint64_t seed = 0) {
    detail::check_pairwise_distinct(halfspaces);
    if (samples == 0) throw InvalidArgument("enumerate_cells: samples must be positive");
    for (const HalfSpace& h : halfspaces)
        if (h.dim() != domain.dim()) throw DimensionMismatch("enumerate_cells: dim mismatch");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::map<CellSignature, std::size_t> counts;
    Vec x(domain.dim());
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < domain.dim(); ++i)
            x[i] = domain.lower[i] + (domain.upper[i] - domain.lower[i]) * unit(rng);
        CellSignature sig;
        sig.membership.resize(halfspaces.size());
        for (std::size_t k = 0; k < halfspaces.size(); ++k)
            sig.membership[k] = side(halfspaces[k], x) == Side::inside;
        ++counts[sig];
    }

    const double vol = domain.volume();
    std::vector<CellEstimate> out;
    out.reserve(counts.size());
    for (const auto& [sig, n] : counts)
        out.push_back({sig, vol * static_cast<double>(n) / static_cast<double>(samples)});
    return out;
}

// ----------------------------------------------------------------------------
// Hyperplane surface charts
// ----------------------------------------------------------------------------

/// Affine chart of a hyperplane section H intersected with a box: a point on H,
/// an orthonormal tangent basis, and a parameter box whose image covers
/// H intersected with the domain.
struct SurfacePatch {
    Vec origin;
    std::vector<Vec> tangents;
    Vec param_lower;
    Vec param_upper;

    std::size_t surface_dim() const { return tangents.size(); }

    Vec point_at(PointView t) const {
        if (t.size() != tangents.size()) throw DimensionMismatch("SurfacePatch::point_at");
        Vec x = origin;
        for (std::size_t k = 0; k < tangents.size(); ++k) add_scaled(x, tangents[k], t[k]);
        return x;
    }
};

/// Chart for H = boundary(h) within `domain`. Throws NoIntersection when the
/// hyperplane misses the open box.
inline SurfacePatch hyperplane_patch(const HalfSpace& h, const BoxDomain& domain) {
    if (h.dim() != domain.dim()) throw DimensionMismatch("hyperplane_patch: dim mismatch");
    const std::size_t d = domain.dim();

    // Interior intersection iff the signed distance changes sign over the corners.
    double smin = std::numeric_limits<double>::infinity();
    double smax = -std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < domain.corner_count(); ++c) {
        const double s = h.signed_distance(domain.corner(c));
        smin = std::min(smin, s);
        smax = std::max(smax, s);
    }
    if (!(smin < 0.0 && smax > 0.0))
        throw NoIntersection("hyperplane does not intersect the interior of the box");

    SurfacePatch patch;
    // Project the box center onto H.
    patch.origin = domain.center();
    add_scaled(patch.origin, h.normal.view(), -h.signed_distance(patch.origin));

    // Orthonormal tangent basis via Gram-Schmidt against the normal.
    for (std::size_t k = 0; k < d && patch.tangents.size() < d - 1; ++k) {
        Vec v(d, 0.0);
        v[k] = 1.0;
        add_scaled(v, h.normal.view(), -h.normal[k]);
        for (const Vec& t : patch.tangents) add_scaled(v, t, -dot(t, v));
        const double n = norm2(v);
        if (n > 1e-8) {
            for (double& c : v) c /= n;
            patch.tangents.push_back(std::move(v));
        }
    }

    // Parameter bounds: tangent coordinates of all box corners relative to the
    // origin bound the projection of the whole box, hence of H within the box.
    patch.param_lower.assign(patch.tangents.size(), std::numeric_limits<double>::infinity());
    patch.param_upper.assign(patch.tangents.size(), -std::numeric_limits<double>::infinity());
    for (std::uint32_t c = 0; c < domain.corner_count(); ++c) {
        Vec rel = domain.corner(c);
        add_scaled(rel, patch.origin, -1.0);
        for (std::size_t k = 0; k < patch.tangents.size(); ++k) {
            const double t = dot(patch.tangents[k], rel);
            patch.param_lower[k] = std::min(patch.param_lower[k], t);
            patch.param_upper[k] = std::max(patch.param_upper[k], t);
        }
    }
    return patch;
}

} // namespace relab

#endif // RELAB_GEOMETRY_HPP
