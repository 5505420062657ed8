#ifndef RELAB_LANDSCAPE_HPP
#define RELAB_LANDSCAPE_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "relab/common.hpp"
#include "relab/loss.hpp"
#include "relab/quadrature.hpp"
#include "relab/response.hpp"

namespace relab {

// ----------------------------------------------------------------------------
// Flat parameter encoding: W1 row-major, then b1, then W2, then b2.
// Total length (d_in + 2) * d + 1.
// ----------------------------------------------------------------------------

inline std::size_t flat_theta_size(std::size_t d, std::size_t d_in) {
    return (d_in + 2) * d + 1;
}

inline Vec flatten(const NetworkConfig& cfg) {
    Vec theta;
    theta.reserve(flat_theta_size(cfg.neuron_count(), cfg.input_dim()));
    for (const Vec& row : cfg.W1) theta.insert(theta.end(), row.begin(), row.end());
    theta.insert(theta.end(), cfg.b1.begin(), cfg.b1.end());
    theta.insert(theta.end(), cfg.W2.begin(), cfg.W2.end());
    theta.push_back(cfg.b2);
    return theta;
}

inline NetworkConfig unflatten(PointView theta, std::size_t d, std::size_t d_in) {
    if (theta.size() != flat_theta_size(d, d_in))
        throw DimensionMismatch("unflatten: theta length does not match (d_in + 2) d + 1");
    NetworkConfig cfg;
    for (std::size_t j = 0; j < d; ++j)
        cfg.W1.emplace_back(theta.begin() + j * d_in, theta.begin() + (j + 1) * d_in);
    cfg.b1.assign(theta.begin() + d * d_in, theta.begin() + d * (d_in + 1));
    cfg.W2.assign(theta.begin() + d * (d_in + 1), theta.begin() + d * (d_in + 2));
    cfg.b2 = theta.back();
    return cfg;
}

// ----------------------------------------------------------------------------
// Error functional and its theta-gradient
// ----------------------------------------------------------------------------

struct ErrGrad {
    double err = 0.0;
    Vec grad;
};

namespace detail {

/// Accumulate err and gradient by differentiating under the quadrature sum.
/// The one-sided ReLU derivative at the kink is 0 (inactive side).
template <class NodeVisitor>
ErrGrad accumulate_err_grad(PointView theta, std::size_t d, std::size_t d_in,
                            const LossSpec& loss, const Measure& m, NodeVisitor&& visit_nodes) {
    ErrGrad out;
    out.grad.assign(theta.size(), 0.0);
    KahanSum err_acc;
    Vec act(d);
    visit_nodes([&](PointView x, double w) {
        double response = theta[theta.size() - 1];
        for (std::size_t j = 0; j < d; ++j) {
            double a = theta[d * d_in + j];
            for (std::size_t i = 0; i < d_in; ++i) a += theta[j * d_in + i] * x[i];
            act[j] = a;
            if (a > 0.0) response += theta[d * (d_in + 1) + j] * a;
        }
        const double hw = w * m.density_at(x);
        err_acc.add(hw * loss(x, response));
        const double gl = hw * loss.dloss_dy(x, response);
        for (std::size_t j = 0; j < d; ++j) {
            const double w2 = theta[d * (d_in + 1) + j];
            if (act[j] > 0.0) {
                for (std::size_t i = 0; i < d_in; ++i)
                    out.grad[j * d_in + i] += gl * w2 * x[i];
                out.grad[d * d_in + j] += gl * w2;
                out.grad[d * (d_in + 1) + j] += gl * act[j];
            }
        }
        out.grad[theta.size() - 1] += gl;
    });
    out.err = err_acc.value();
    return out;
}

/// Breaklines of the current parameter vector (degenerate rows skipped),
/// plus the target's own kink hyperplanes.
inline std::vector<HalfSpace> integration_lines(PointView theta, std::size_t d,
                                                std::size_t d_in, const LossSpec& loss) {
    std::vector<HalfSpace> lines = loss.target_kinks;
    for (std::size_t j = 0; j < d; ++j) {
        Vec w(theta.begin() + j * d_in, theta.begin() + (j + 1) * d_in);
        const double n = norm2(w);
        if (n == 0.0) continue;
        lines.emplace_back(UnitVector::normalized(w), -theta[d * d_in + j] / n);
    }
    return lines;
}

} // namespace detail

/// err(theta) and gradient under a fixed node design (tensor grid, or a
/// seeded Monte Carlo point set reused across calls). Node positions do not
/// depend on theta, so a finite difference of the value matches the analytic
/// gradient away from node/breakline coincidences.
inline ErrGrad error_and_gradient_fixed(PointView theta, std::size_t d, std::size_t d_in,
                                        const LossSpec& loss, const Measure& m,
                                        const VolumeRule& rule) {
    return detail::accumulate_err_grad(theta, d, d_in, loss, m, [&](auto&& fn) {
        if (rule.kind == VolumeRule::Kind::monte_carlo)
            detail::for_each_monte_carlo_node(m.domain, rule.resolution, rule.seed, fn);
        else
            detail::for_each_tensor_node(m.domain, rule.kind, rule.resolution, fn);
    });
}

/// err(theta) and gradient with cell-exact subdivision along the current
/// breaklines and the target kinks (d_in <= 2).
inline ErrGrad error_and_gradient_piecewise(PointView theta, std::size_t d, std::size_t d_in,
                                            const LossSpec& loss, const Measure& m,
                                            std::size_t nodes_per_axis = 24) {
    const auto lines = detail::integration_lines(theta, d, d_in, loss);
    return detail::accumulate_err_grad(theta, d, d_in, loss, m, [&](auto&& fn) {
        detail::for_each_piecewise_node(m.domain, lines, nodes_per_axis, fn);
    });
}

// ----------------------------------------------------------------------------
// Training
// ----------------------------------------------------------------------------

struct TrainConfig {
    std::size_t d = 1;
    double step_size = 0.05;
    std::size_t steps = 1000;
    struct Init {
        std::uint64_t seed = 0;
        double scale = 1.0;
    } init;
    enum class GradientMode { analytic, finite_difference };
    GradientMode gradient = GradientMode::analytic;
    VolumeRule quadrature{VolumeRule::Kind::tensor_gauss, 24, 0};
    std::size_t snapshot_every = 1000;
};

struct Trajectory {
    struct Record {
        std::size_t step = 0;
        double err = 0.0;
        double param_norm = 0.0;
        double grad_norm = std::numeric_limits<double>::quiet_NaN();
    };
    std::vector<Record> records;
    std::vector<std::pair<std::size_t, EffectiveTuple>> snapshots;
};

enum class TrainStatus { ok, non_finite_loss };

struct TrainResult {
    EffectiveTuple best;
    double best_err = std::numeric_limits<double>::infinity();
    Trajectory trajectory;
    TrainStatus status = TrainStatus::ok;
};

namespace detail {

/// Stratified directions: each normal is marginally uniform on the sphere,
/// but the set is spread out (balanced signs in one dimension, jittered
/// equispaced angles in two), so the initial breaklines do not bunch up.
inline std::vector<UnitVector> stratified_normals(std::mt19937_64& rng, std::size_t d,
                                                  std::size_t d_in) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<UnitVector> normals;
    if (d_in == 1) {
        for (std::size_t j = 0; j < d; ++j)
            normals.push_back(UnitVector::normalized(Vec{j % 2 == 0 ? 1.0 : -1.0}));
        if (d > 0 && unit(rng) < 0.5)
            for (auto& n : normals) n = n.flipped();
    } else if (d_in == 2) {
        const double pi = std::acos(-1.0);
        const double jitter = unit(rng);
        for (std::size_t j = 0; j < d; ++j) {
            const double phi = 2.0 * pi * (static_cast<double>(j) + jitter) /
                               static_cast<double>(std::max<std::size_t>(d, 1));
            normals.push_back(UnitVector::normalized(Vec{std::cos(phi), std::sin(phi)}));
        }
    } else {
        for (std::size_t j = 0; j < d; ++j) {
            for (;;) {
                Vec v(d_in);
                for (double& c : v) c = gauss(rng);
                if (norm2(v) > 1e-6) {
                    normals.push_back(UnitVector::normalized(v));
                    break;
                }
            }
        }
    }
    std::shuffle(normals.begin(), normals.end(), rng);
    return normals;
}

inline EffectiveTuple random_init_tuple(const TrainConfig& cfg, const LossSpec& loss,
                                        const Measure& m) {
    std::mt19937_64 rng(cfg.init.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t d_in = m.domain.dim();

    double bias = 0.0;
    if (loss.target)
        bias = integrate_volume_piecewise(loss.target, m, loss.target_kinks, 24).value;

    EffectiveTuple t;
    t.bias = bias;
    t.normals = stratified_normals(rng, cfg.d, d_in);
    for (std::size_t j = 0; j < cfg.d; ++j) {
        // Offset uniform over the projection of the box onto the normal, so
        // every breakline starts inside the domain.
        const UnitVector& n = t.normals[j];
        double pmin = std::numeric_limits<double>::infinity();
        double pmax = -std::numeric_limits<double>::infinity();
        for (std::uint32_t c = 0; c < m.domain.corner_count(); ++c) {
            const double p = dot(n.view(), m.domain.corner(c));
            pmin = std::min(pmin, p);
            pmax = std::max(pmax, p);
        }
        t.offsets.push_back(pmin + (pmax - pmin) * unit(rng));
        t.kinks.push_back(cfg.init.scale * gauss(rng));
    }
    return t;
}

} // namespace detail

/// Plain gradient descent on the flat parameter vector. Deterministic given
/// the seed; returns the best-seen tuple and the full trajectory.
inline TrainResult train(const TrainConfig& cfg, const LossSpec& loss, const Measure& m) {
    if (!(cfg.step_size > 0.0)) throw InvalidArgument("train: step_size must be > 0");
    if (cfg.steps < 1) throw InvalidArgument("train: steps >= 1 required");
    const std::size_t d_in = m.domain.dim();

    Vec theta = flatten(from_effective(detail::random_init_tuple(cfg, loss, m)));

    auto eval_err_grad = [&](PointView th) -> ErrGrad {
        if (cfg.quadrature.kind == VolumeRule::Kind::tensor_gauss && d_in <= 2) {
            if (cfg.gradient == TrainConfig::GradientMode::analytic)
                return error_and_gradient_piecewise(th, cfg.d, d_in, loss, m,
                                                    cfg.quadrature.resolution);
            ErrGrad eg;
            Vec probe(th.begin(), th.end());
            auto value = [&](const Vec& t) {
                const auto lines = detail::integration_lines(t, cfg.d, d_in, loss);
                return error_functional_piecewise(
                    [&](PointView x) { return eval_network(unflatten(t, cfg.d, d_in), x); },
                    loss.pointwise, m, lines, cfg.quadrature.resolution);
            };
            eg.err = value(probe);
            eg.grad.assign(th.size(), 0.0);
            for (std::size_t i = 0; i < th.size(); ++i) {
                const double h = 1e-6 * (1.0 + std::abs(th[i]));
                const double keep = probe[i];
                probe[i] = keep + h;
                const double up = value(probe);
                probe[i] = keep - h;
                const double dn = value(probe);
                probe[i] = keep;
                eg.grad[i] = (up - dn) / (2.0 * h);
            }
            return eg;
        }
        return error_and_gradient_fixed(th, cfg.d, d_in, loss, m, cfg.quadrature);
    };

    TrainResult result;
    Vec best_theta = theta;
    for (std::size_t step = 0; step <= cfg.steps; ++step) {
        ErrGrad eg;
        try {
            eg = eval_err_grad(theta);
        } catch (const NonFiniteIntegrand&) {
            result.status = TrainStatus::non_finite_loss;
            break;
        }
        if (!std::isfinite(eg.err) || !all_finite(eg.grad)) {
            result.status = TrainStatus::non_finite_loss;
            break;
        }
        result.trajectory.records.push_back({step, eg.err, norm2(theta), norm2(eg.grad)});
        if (eg.err < result.best_err) {
            result.best_err = eg.err;
            best_theta = theta;
        }
        if (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0)
            result.trajectory.snapshots.emplace_back(
                step, to_effective(unflatten(theta, cfg.d, d_in)));
        if (step == cfg.steps) break;
        add_scaled(theta, eg.grad, -cfg.step_size);
    }
    result.best = to_effective(unflatten(best_theta, cfg.d, d_in));
    return result;
}

// ----------------------------------------------------------------------------
// Brute-force reference search
// ----------------------------------------------------------------------------

struct OracleResult {
    double err = std::numeric_limits<double>::infinity();
    EffectiveTuple tuple;
};

namespace detail {

struct OracleCoords {
    // Per neuron: direction (angle for d_in = 2, sign for d_in = 1), offset,
    // kink; plus the shared bias.
    Vec direction;
    Vec offset;
    Vec kink;
    double bias = 0.0;

    EffectiveTuple to_tuple(std::size_t d_in) const {
        EffectiveTuple t;
        t.bias = bias;
        for (std::size_t j = 0; j < direction.size(); ++j) {
            if (d_in == 1)
                t.normals.push_back(
                    UnitVector::normalized(Vec{direction[j] >= 0.0 ? 1.0 : -1.0}));
            else
                t.normals.push_back(UnitVector::normalized(
                    Vec{std::cos(direction[j]), std::sin(direction[j])}));
            t.offsets.push_back(offset[j]);
            t.kinks.push_back(kink[j]);
        }
        return t;
    }
};

} // namespace detail

/// Multi-start coordinate search over effective-tuple coordinates; reference
/// upper bound for `train`. Guarded to d <= 2, d_in <= 2. `budget` caps the
/// number of error evaluations; `warm_start` (zero-padded as needed) lets a
/// lower-d solution seed the search.
inline OracleResult oracle_min(std::size_t d, const LossSpec& loss, const Measure& m,
                               std::size_t budget, std::uint64_t seed = 1,
                               std::optional<EffectiveTuple> warm_start = std::nullopt) {
    const std::size_t d_in = m.domain.dim();
    if (d > 2 || d_in > 2)
        throw PreconditionViolation("oracle_min: guarded to d <= 2 and d_in <= 2");

    std::size_t evals = 0;
    auto err_of = [&](const detail::OracleCoords& c) {
        if (evals >= budget) throw BudgetExceeded("oracle_min: evaluation budget exhausted");
        ++evals;
        const EffectiveTuple t = c.to_tuple(d_in);
        std::vector<HalfSpace> lines = loss.target_kinks;
        for (std::size_t j = 0; j < t.neuron_count(); ++j) lines.push_back(t.activity(j));
        return error_functional_piecewise(
            [&](PointView x) { return eval_tuple(t, x); }, loss.pointwise, m, lines, 20);
    };

    const std::size_t coords_per_start = 1 + 3 * d;
    const std::size_t min_cost = coords_per_start * 30 + 2;
    if (budget < min_cost)
        throw BudgetExceeded("oracle_min: budget below the cost of a single sweep");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double pi = std::acos(-1.0);

    double offset_lo = std::numeric_limits<double>::infinity();
    double offset_hi = -std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < m.domain.corner_count(); ++c) {
        const double p = norm2(m.domain.corner(c));
        offset_lo = std::min(offset_lo, -p);
        offset_hi = std::max(offset_hi, p);
    }
    const auto [c0, err0] = best_constant(loss, m);

    std::vector<detail::OracleCoords> starts;
    if (warm_start) {
        detail::OracleCoords w;
        w.bias = warm_start->bias;
        for (std::size_t j = 0; j < std::min(d, warm_start->neuron_count()); ++j) {
            const auto& n = warm_start->normals[j];
            w.direction.push_back(d_in == 1 ? n[0] : std::atan2(n[1], n[0]));
            w.offset.push_back(warm_start->offsets[j]);
            w.kink.push_back(warm_start->kinks[j]);
        }
        while (w.direction.size() < d) {
            w.direction.push_back(d_in == 1 ? 1.0 : 0.0);
            w.offset.push_back(0.5 * (offset_lo + offset_hi));
            w.kink.push_back(0.0);
        }
        starts.push_back(std::move(w));
    }
    const std::size_t restarts = d == 0 ? 1 : 12;
    for (std::size_t r = 0; r < restarts; ++r) {
        detail::OracleCoords c;
        c.bias = c0 + (unit(rng) - 0.5);
        for (std::size_t j = 0; j < d; ++j) {
            c.direction.push_back(d_in == 1 ? (unit(rng) < 0.5 ? -1.0 : 1.0)
                                            : 2.0 * pi * unit(rng));
            c.offset.push_back(offset_lo + (offset_hi - offset_lo) * unit(rng));
            c.kink.push_back(4.0 * (unit(rng) - 0.5));
        }
        starts.push_back(std::move(c));
    }

    OracleResult best;
    best.err = err0;
    best.tuple = detail::OracleCoords{{}, {}, {}, c0}.to_tuple(d_in);
    if (d == 0) {
        // Only the bias coordinate; the golden-section in best_constant already
        // solved it, but run one refinement pass through err_of for parity.
        detail::OracleCoords c{{}, {}, {}, c0};
        const double e = err_of(c);
        if (e < best.err) {
            best.err = e;
            best.tuple = c.to_tuple(d_in);
        }
        return best;
    }

    try {
        for (auto& start : starts) {
            detail::OracleCoords cur = start;
            double cur_err = err_of(cur);

            // One accessor and one search radius per continuous coordinate.
            // A radius expands when the line minimum lands near the bracket
            // edge and contracts otherwise, so sweeps home in at machine
            // precision without a fixed schedule.
            std::vector<std::function<double&(detail::OracleCoords&)>> coords;
            Vec radii;
            for (std::size_t j = 0; j < d; ++j) {
                if (d_in == 2) {
                    coords.push_back(
                        [j](detail::OracleCoords& c) -> double& { return c.direction[j]; });
                    radii.push_back(pi);
                }
                coords.push_back(
                    [j](detail::OracleCoords& c) -> double& { return c.offset[j]; });
                radii.push_back(0.5 * (offset_hi - offset_lo));
                coords.push_back(
                    [j](detail::OracleCoords& c) -> double& { return c.kink[j]; });
                radii.push_back(3.0);
            }
            coords.push_back([](detail::OracleCoords& c) -> double& { return c.bias; });
            radii.push_back(2.0);

            for (std::size_t sweep = 0; sweep < 150; ++sweep) {
                if (d_in == 1) {
                    for (std::size_t j = 0; j < d; ++j) {
                        detail::OracleCoords flip = cur;
                        flip.direction[j] = -flip.direction[j];
                        const double e = err_of(flip);
                        if (e < cur_err) {
                            cur = flip;
                            cur_err = e;
                        }
                    }
                }
                for (std::size_t i = 0; i < coords.size(); ++i) {
                    const double center = coords[i](cur);
                    double& radius = radii[i];
                    auto [v, e] = detail::golden_min(
                        [&](double x) {
                            detail::OracleCoords c = cur;
                            coords[i](c) = x;
                            return err_of(c);
                        },
                        center - radius, center + radius, 24);
                    if (e < cur_err) {
                        coords[i](cur) = v;
                        cur_err = e;
                    }
                    radius *= std::abs(v - center) > 0.8 * radius ? 2.0 : 0.55;
                    radius = std::clamp(radius, 1e-10, 1e3);
                }
                if (norm_inf(radii) < 1e-9) break;
            }
            if (cur_err < best.err) {
                best.err = cur_err;
                best.tuple = cur.to_tuple(d_in);
            }
        }
    } catch (const BudgetExceeded&) {
        // Budget ran out mid-search; the best visited point still stands.
    }
    return best;
}

// ----------------------------------------------------------------------------
// Divergence diagnostics
// ----------------------------------------------------------------------------

enum class DivergenceVerdict { converged, plateau_with_norm_blowup, undecided };

inline std::string to_string(DivergenceVerdict v) {
    switch (v) {
        case DivergenceVerdict::converged: return "converged";
        case DivergenceVerdict::plateau_with_norm_blowup: return "plateau_with_norm_blowup";
        default: return "undecided";
    }
}

/// Classify a trajectory: an error plateau with a x10 parameter blow-up over
/// the last half signals a diverging minimizing sequence; a small terminal
/// gradient with bounded parameters signals convergence.
inline DivergenceVerdict divergence_report(const Trajectory& traj) {
    const auto& rec = traj.records;
    if (rec.size() < 100)
        throw PreconditionViolation("divergence_report: trajectory length >= 100 required");
    const auto& mid = rec[rec.size() / 2];
    const auto& end = rec.back();
    const bool plateau = mid.err - end.err < 1e-6;
    const bool blowup = end.param_norm >= 10.0 * mid.param_norm;
    if (plateau && blowup) return DivergenceVerdict::plateau_with_norm_blowup;
    const bool bounded = end.param_norm < 10.0 * std::max(1.0, mid.param_norm);
    if (end.grad_norm < 1e-6 && bounded) return DivergenceVerdict::converged;
    return DivergenceVerdict::undecided;
}

} // namespace relab

#endif // RELAB_LANDSCAPE_HPP
