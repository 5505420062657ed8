#ifndef RELAB_RESPONSE_HPP
#define RELAB_RESPONSE_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "relab/common.hpp"
#include "relab/geometry.hpp"
#include "relab/linalg.hpp"

namespace relab {

inline constexpr double kContainmentTol = 1e-10;
inline constexpr double kRankSvTol = 1e-10;
inline constexpr double kBreaklineClearance = 1e-6;

// ----------------------------------------------------------------------------
// Network parametrizations
// ----------------------------------------------------------------------------

/// Raw weights of a single-hidden-layer ReLU network. d = 0 is allowed and
/// denotes the constant function b2.
struct NetworkConfig {
    std::vector<Vec> W1; // d rows of length d_in
    Vec b1;              // length d
    Vec W2;              // length d
    double b2 = 0.0;

    NetworkConfig() = default;
    NetworkConfig(std::vector<Vec> w1, Vec b1_, Vec w2, double b2_)
        : W1(std::move(w1)), b1(std::move(b1_)), W2(std::move(w2)), b2(b2_) {
        if (W1.size() != b1.size() || W1.size() != W2.size())
            throw DimensionMismatch("NetworkConfig: inconsistent neuron counts");
        for (const Vec& row : W1)
            if (row.size() != W1.front().size())
                throw DimensionMismatch("NetworkConfig: ragged W1");
    }

    std::size_t neuron_count() const { return W1.size(); }
    std::size_t input_dim() const { return W1.empty() ? 0 : W1.front().size(); }
};

/// Geometric parametrization by unit normals, offsets, kinks and bias:
/// x -> bias + sum_j kink_j * (normal_j . x - offset_j)^+.
struct EffectiveTuple {
    std::vector<UnitVector> normals;
    Vec offsets;
    Vec kinks;
    double bias = 0.0;

    EffectiveTuple() = default;
    EffectiveTuple(std::vector<UnitVector> n, Vec o, Vec k, double b)
        : normals(std::move(n)), offsets(std::move(o)), kinks(std::move(k)), bias(b) {
        if (normals.size() != offsets.size() || normals.size() != kinks.size())
            throw DimensionMismatch("EffectiveTuple: inconsistent lengths");
        for (const UnitVector& u : normals)
            if (u.dim() != normals.front().dim())
                throw DimensionMismatch("EffectiveTuple: mixed input dims");
    }

    std::size_t neuron_count() const { return normals.size(); }
    std::size_t input_dim() const { return normals.empty() ? 0 : normals.front().dim(); }

    /// Boundary hyperplane of neuron j, as the activity half-space.
    HalfSpace activity(std::size_t j) const { return HalfSpace(normals[j], offsets[j]); }
};

enum class ResponseCase { a, b, c };

inline std::string to_string(ResponseCase c) {
    switch (c) {
        case ResponseCase::a: return "a";
        case ResponseCase::b: return "b";
        default: return "c";
    }
}

/// Piecewise-affine function
///   x -> affine_linear . x + affine_const
///        + sum_k 1_{A_k}(x) * (delta_k . x + jump_k),
/// where A_k are open half-spaces with pairwise distinct boundaries.
/// Summands carry multiplicity 1 (continuous across the boundary) or 2
/// (genuine jump); m0 charges the affine part. The case tag records which of
/// the structural alternatives legitimizes the representation:
///   (a) m0 = 1,
///   (b) the normals of multiplicity-2 summands are linearly dependent,
///   (c) the affine part is constant.
struct GeneralizedResponse {
    struct Summand {
        HalfSpace halfspace;
        Vec delta;
        double jump = 0.0;
        int multiplicity = 1;
    };

    Vec affine_linear;
    double affine_const = 0.0;
    std::vector<Summand> summands;
    int m0 = 0;
    ResponseCase case_tag = ResponseCase::c;

    std::size_t input_dim() const { return affine_linear.size(); }
};

/// Classification emitted by canonical_reduce. `reduced_dimension` is the cost
/// m0 + sum m_k of the canonically reduced representation (an upper bound for
/// the minimal cost over all representations).
struct ResponseClass {
    std::size_t reduced_dimension = 0;
    bool representable = false;

    /// Strict at budget d: costs at most d-1, or is discontinuous.
    bool strict_at(std::size_t d) const { return !representable || reduced_dimension + 1 <= d; }
};

// ----------------------------------------------------------------------------
// Evaluation
// ----------------------------------------------------------------------------

inline double eval_network(const NetworkConfig& cfg, PointView x) {
    if (cfg.neuron_count() > 0 && x.size() != cfg.input_dim())
        throw DimensionMismatch("eval_network: point dim mismatch");
    KahanSum acc;
    for (std::size_t j = 0; j < cfg.neuron_count(); ++j) {
        const double a = dot(cfg.W1[j], x) + cfg.b1[j];
        if (a > 0.0) acc.add(cfg.W2[j] * a);
    }
    acc.add(cfg.b2);
    return acc.value();
}

inline double eval_tuple(const EffectiveTuple& t, PointView x) {
    if (t.neuron_count() > 0 && x.size() != t.input_dim())
        throw DimensionMismatch("eval_tuple: point dim mismatch");
    KahanSum acc;
    for (std::size_t j = 0; j < t.neuron_count(); ++j) {
        const double a = dot(t.normals[j].view(), x) - t.offsets[j];
        if (a > 0.0) acc.add(t.kinks[j] * a);
    }
    acc.add(t.bias);
    return acc.value();
}

/// Open half-space convention: the jump term contributes 0 on the boundary.
inline double eval_generalized(const GeneralizedResponse& r, PointView x) {
    if (x.size() != r.input_dim())
        throw InvalidResponse("eval_generalized: point dim mismatch");
    KahanSum acc;
    acc.add(dot(r.affine_linear, x));
    acc.add(r.affine_const);
    for (const auto& s : r.summands)
        if (side(s.halfspace, x) == Side::inside) acc.add(dot(s.delta, x) + s.jump);
    return acc.value();
}

// ----------------------------------------------------------------------------
// Conversions
// ----------------------------------------------------------------------------

/// Normalize raw weights into the geometric parametrization. A degenerate
/// neuron (zero incoming weights) contributes the constant W2_j*(b1_j)^+ to the
/// bias and is kept with kink 0, canonical normal e1 and offset 0.
inline EffectiveTuple to_effective(const NetworkConfig& cfg) {
    EffectiveTuple t;
    t.bias = cfg.b2;
    for (std::size_t j = 0; j < cfg.neuron_count(); ++j) {
        const double w = norm2(cfg.W1[j]);
        if (w == 0.0) {
            t.normals.push_back(UnitVector::axis(cfg.input_dim(), 0));
            t.offsets.push_back(0.0);
            t.kinks.push_back(0.0);
            t.bias += cfg.W2[j] * std::max(cfg.b1[j], 0.0);
        } else {
            t.normals.push_back(UnitVector::normalized(cfg.W1[j]));
            t.offsets.push_back(-cfg.b1[j] / w);
            t.kinks.push_back(w * cfg.W2[j]);
        }
    }
    return t;
}

inline NetworkConfig from_effective(const EffectiveTuple& t) {
    NetworkConfig cfg;
    cfg.b2 = t.bias;
    for (std::size_t j = 0; j < t.neuron_count(); ++j) {
        cfg.W1.push_back(t.normals[j].components());
        cfg.b1.push_back(-t.offsets[j]);
        cfg.W2.push_back(t.kinks[j]);
    }
    return cfg;
}

/// Per-neuron conversion to the indicator form. Requires pairwise distinct
/// breaklines; feed shared-breakline tuples through a merge first.
inline GeneralizedResponse tuple_to_generalized(const EffectiveTuple& t) {
    for (std::size_t i = 0; i < t.neuron_count(); ++i)
        for (std::size_t j = i + 1; j < t.neuron_count(); ++j)
            if (same_hyperplane(t.activity(i), t.activity(j)))
                throw SharedBreakline("neurons " + std::to_string(i) + " and " +
                                      std::to_string(j) + " share a breakline");
    GeneralizedResponse r;
    r.affine_linear.assign(t.input_dim(), 0.0);
    r.affine_const = t.bias;
    r.m0 = 0;
    r.case_tag = ResponseCase::c;
    for (std::size_t j = 0; j < t.neuron_count(); ++j) {
        GeneralizedResponse::Summand s{t.activity(j), scaled(t.normals[j].view(), t.kinks[j]),
                                       -t.kinks[j] * t.offsets[j], 1};
        r.summands.push_back(std::move(s));
    }
    return r;
}

/// Gradient of the tuple response away from all breaklines (clearance 1e-6).
inline Vec response_gradient(const EffectiveTuple& t, PointView x) {
    Vec g(x.size(), 0.0);
    for (std::size_t j = 0; j < t.neuron_count(); ++j) {
        const double a = dot(t.normals[j].view(), x) - t.offsets[j];
        if (std::abs(a) <= kBreaklineClearance)
            throw OnBreakline("point within 1e-6 of breakline " + std::to_string(j));
        if (a > 0.0) add_scaled(g, t.normals[j].view(), t.kinks[j]);
    }
    return g;
}

// ----------------------------------------------------------------------------
// Validation and canonical reduction
// ----------------------------------------------------------------------------

namespace detail {

/// delta is a multiple of the boundary normal and the jump term vanishes on
/// the boundary: delta.(o n) + jump = 0.
inline bool boundary_containment(const HalfSpace& hs, PointView delta, double jump,
                                 double tol = kContainmentTol) {
    const double proj = dot(hs.normal.view(), delta);
    for (std::size_t i = 0; i < delta.size(); ++i)
        if (std::abs(delta[i] - proj * hs.normal[i]) > tol) return false;
    return std::abs(proj * hs.offset + jump) <= tol;
}

inline std::vector<Vec> multiplicity_two_normals(const GeneralizedResponse& r) {
    std::vector<Vec> cols;
    for (const auto& s : r.summands)
        if (s.multiplicity == 2) cols.push_back(s.halfspace.normal.components());
    return cols;
}

struct CaseStatus {
    bool a = false, b = false, c = false;
    bool any() const { return a || b || c; }
    bool holds(ResponseCase t) const {
        return t == ResponseCase::a ? a : (t == ResponseCase::b ? b : c);
    }
};

inline CaseStatus case_status(const GeneralizedResponse& r) {
    CaseStatus st;
    st.a = r.m0 == 1;
    st.c = norm_inf(r.affine_linear) <= 1e-12;
    const auto cols = multiplicity_two_normals(r);
    st.b = linalg::columns_dependent(cols, kRankSvTol);
    return st;
}

} // namespace detail

/// Structural checks; returns human-readable violations (empty = ok).
inline std::vector<std::string> validate(const GeneralizedResponse& r) {
    std::vector<std::string> v;
    const std::size_t d_in = r.input_dim();
    if (d_in == 0) v.push_back("input dimension is zero");
    for (std::size_t k = 0; k < r.summands.size(); ++k) {
        const auto& s = r.summands[k];
        if (s.halfspace.dim() != d_in || s.delta.size() != d_in)
            v.push_back("summand " + std::to_string(k) + ": dimension mismatch");
        if (s.multiplicity != 1 && s.multiplicity != 2)
            v.push_back("summand " + std::to_string(k) + ": multiplicity must be 1 or 2");
    }
    if (r.m0 != 0 && r.m0 != 1) v.push_back("m0 must be 0 or 1");
    if (!v.empty()) return v;

    for (std::size_t i = 0; i < r.summands.size(); ++i)
        for (std::size_t j = i + 1; j < r.summands.size(); ++j)
            if (same_hyperplane(r.summands[i].halfspace, r.summands[j].halfspace))
                v.push_back("pairwise distinct boundaries violated by summands " +
                            std::to_string(i) + " and " + std::to_string(j));

    for (std::size_t k = 0; k < r.summands.size(); ++k) {
        const auto& s = r.summands[k];
        if (s.multiplicity == 1 &&
            !detail::boundary_containment(s.halfspace, s.delta, s.jump))
            v.push_back("summand " + std::to_string(k) +
                        ": multiplicity 1 requires the jump term to vanish on the boundary");
    }

    const auto st = detail::case_status(r);
    if (!st.holds(r.case_tag)) {
        if (st.any())
            v.push_back("case tag (" + to_string(r.case_tag) +
                        ") not satisfied by the representation");
        else
            v.push_back("none of the cases (a)/(b)/(c) holds");
    }
    return v;
}

inline void ensure_valid(const GeneralizedResponse& r) {
    const auto v = validate(r);
    if (!v.empty()) {
        std::string msg = "invalid generalized response:";
        for (const auto& s : v) msg += "\n  - " + s;
        throw InvalidResponse(msg);
    }
}

namespace detail {

/// Pick the cheapest admissible (m0, case) combination: first try m0 = 0 with
/// a constant affine part (c), then m0 = 0 with dependent jump normals (b),
/// otherwise m0 = 1 (a).
inline void retag_cheapest(GeneralizedResponse& r) {
    if (norm_inf(r.affine_linear) <= 1e-12) {
        r.m0 = 0;
        r.case_tag = ResponseCase::c;
        return;
    }
    if (linalg::columns_dependent(multiplicity_two_normals(r), kRankSvTol)) {
        r.m0 = 0;
        r.case_tag = ResponseCase::b;
        return;
    }
    r.m0 = 1;
    r.case_tag = ResponseCase::a;
}

} // namespace detail

/// Merge summands sharing a boundary (folding opposite sides into the affine
/// part), drop vanished summands, downgrade multiplicities where the jump term
/// is continuous, and re-tag with the cheapest admissible case. Evaluations
/// change at most on the union of the boundaries.
inline std::pair<GeneralizedResponse, ResponseClass>
canonical_reduce(const GeneralizedResponse& r) {
    const std::size_t d_in = r.input_dim();
    if (d_in == 0) throw InvalidResponse("canonical_reduce: input dimension is zero");
    for (const auto& s : r.summands)
        if (s.halfspace.dim() != d_in || s.delta.size() != d_in)
            throw InvalidResponse("canonical_reduce: dimension mismatch");

    GeneralizedResponse out;
    out.affine_linear = r.affine_linear;
    out.affine_const = r.affine_const;

    for (const auto& s : r.summands) {
        // Canonical orientation: first significant normal component positive.
        bool flip = false;
        for (std::size_t i = 0; i < d_in; ++i) {
            if (std::abs(s.halfspace.normal[i]) > 1e-12) {
                flip = s.halfspace.normal[i] < 0.0;
                break;
            }
        }
        HalfSpace hs = flip ? s.halfspace.opposite() : s.halfspace;
        Vec delta = s.delta;
        double jump = s.jump;
        if (flip) {
            // 1_A (d.x + j) = (d.x + j) - 1_{A'} (d.x + j) off the boundary.
            add_scaled(out.affine_linear, delta, 1.0);
            out.affine_const += jump;
            delta = negated(delta);
            jump = -jump;
        }
        bool merged = false;
        for (auto& g : out.summands) {
            if (same_hyperplane(g.halfspace, hs)) {
                add_scaled(g.delta, delta, 1.0);
                g.jump += jump;
                merged = true;
                break;
            }
        }
        if (!merged) out.summands.push_back({hs, std::move(delta), jump, 2});
    }

    std::erase_if(out.summands, [](const GeneralizedResponse::Summand& s) {
        return norm_inf(s.delta) <= 1e-14 && std::abs(s.jump) <= 1e-14;
    });

    for (auto& s : out.summands)
        s.multiplicity =
            detail::boundary_containment(s.halfspace, s.delta, s.jump) ? 1 : 2;

    detail::retag_cheapest(out);

    ResponseClass cls;
    cls.reduced_dimension = static_cast<std::size_t>(out.m0);
    cls.representable = true;
    for (const auto& s : out.summands) {
        cls.reduced_dimension += static_cast<std::size_t>(s.multiplicity);
        if (s.multiplicity != 1) cls.representable = false;
    }
    return {std::move(out), cls};
}

// ----------------------------------------------------------------------------
// Cell restriction
// ----------------------------------------------------------------------------

/// Affine data (gradient, intercept) of the response on the open cell selected
/// by a membership signature over the response's half-spaces.
inline std::pair<Vec, double> cell_affine(const GeneralizedResponse& r,
                                          const CellSignature& sig) {
    if (sig.membership.size() != r.summands.size())
        throw SignatureMismatch("cell_affine: signature length does not match summand count");
    Vec gradient = r.affine_linear;
    double intercept = r.affine_const;
    for (std::size_t k = 0; k < r.summands.size(); ++k) {
        if (sig.membership[k]) {
            add_scaled(gradient, r.summands[k].delta, 1.0);
            intercept += r.summands[k].jump;
        }
    }
    return {std::move(gradient), intercept};
}

} // namespace relab

#endif // RELAB_RESPONSE_HPP
