#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "relab/closure.hpp"
#include "relab/targets.hpp"

using namespace relab;

namespace {

Measure uniform_square() { return uniform_measure(BoxDomain({-1, -1}, {1, 1})); }

GeneralizedResponse opposing_jumps_fixture() {
    GeneralizedResponse r;
    r.affine_linear = {0.0, 0.0};
    r.affine_const = 0.0;
    r.summands.push_back({HalfSpace(UnitVector::normalized(Vec{1, 0}), -0.3),
                          Vec{0.0, 0.0}, 1.0, 2});
    r.summands.push_back({HalfSpace(UnitVector::normalized(Vec{-1, 0}), -0.3),
                          Vec{0.0, 0.0}, 0.5, 2});
    r.m0 = 0;
    r.case_tag = ResponseCase::b;
    return r;
}

GeneralizedResponse step_response() {
    GeneralizedResponse r;
    r.affine_linear = {0.0};
    r.affine_const = 0.0;
    r.summands.push_back({HalfSpace(UnitVector::normalized(Vec{1}), 0.0), Vec{0.0}, 1.0, 2});
    r.m0 = 0;
    r.case_tag = ResponseCase::c;
    return r;
}

/// Closed-form limiting decrement for the opposing-jumps fixture with the
/// squared loss against the constant target 0.75 on the uniform unit square.
///
/// On H1 = {x1 = -0.3}: the off-summand value is 0.5, the segment is
/// [0.5, 1.5], so Lbar = mean of (y - 0.75)^2 = 0.4375/3, L- = 0.0625,
/// L+ = 0.5625, q = 1, line mass = 2 * 1/4.
/// On H2 = {x1 = +0.3}: segment [1, 1.5], Lbar = 2 * 0.40625/3, L- = 0.0625,
/// L+ = 0.5625, q = 1/2, line mass = 2 * 1/4.
double opposing_jumps_decrement_oracle() {
    const double h1 = 0.5 * (2.0 * (0.4375 / 3.0) - 0.0625 - 0.5625) * 1.0;
    const double h2 = 0.5 * (2.0 * (2.0 * 0.40625 / 3.0) - 0.0625 - 0.5625) * 0.5;
    return h1 + h2; // = -3/16
}

} // namespace

TEST_CASE("find_dependence on opposing normals") {
    const auto fd = find_dependence(opposing_jumps_fixture());
    REQUIRE(fd.has_value());
    REQUIRE(fd->dependence.support == std::vector<std::size_t>{0, 1});
    CHECK(fd->dependence.alphas[0] == Catch::Approx(1.0));
    CHECK(fd->dependence.alphas[1] == Catch::Approx(1.0));
    // sum of alpha_j n_j vanishes.
    Vec sum(2, 0.0);
    for (std::size_t p = 0; p < 2; ++p)
        add_scaled(sum, fd->response.summands[p].halfspace.normal.view(),
                   fd->dependence.alphas[p]);
    CHECK(norm_inf(sum) < 1e-10);
}

TEST_CASE("find_dependence returns none for independent normals") {
    GeneralizedResponse r;
    r.affine_linear = {0.0, 0.0};
    r.summands.push_back({HalfSpace(UnitVector::normalized(Vec{1, 0}), 0.3), Vec{0.0, 0.0},
                          1.0, 1});
    r.summands[0].jump = 0.0; // continuous: delta = 0, jump = 0 on the boundary
    r.m0 = 0;
    r.case_tag = ResponseCase::c;
    CHECK_FALSE(find_dependence(r).has_value());

    GeneralizedResponse indep = opposing_jumps_fixture();
    indep.summands[1].halfspace = HalfSpace(UnitVector::normalized(Vec{0, 1}), -0.3);
    indep.case_tag = ResponseCase::c; // (b) no longer holds
    CHECK_FALSE(find_dependence(indep).has_value());
}

TEST_CASE("find_dependence prunes to a minimal support") {
    GeneralizedResponse r = opposing_jumps_fixture();
    r.summands.push_back({HalfSpace(UnitVector::normalized(Vec{0, 1}), 0.1), Vec{0.0, 0.0},
                          0.25, 2});
    const auto fd = find_dependence(r);
    REQUIRE(fd.has_value());
    CHECK(fd->dependence.support == std::vector<std::size_t>{0, 1});
}

TEST_CASE("switch_sides rewrites the step response") {
    const GeneralizedResponse r = step_response();
    const GeneralizedResponse sw = switch_sides(r, 0);
    CHECK(sw.affine_const == Catch::Approx(1.0));
    CHECK(sw.summands[0].jump == Catch::Approx(-1.0));
    CHECK(sw.summands[0].halfspace.normal[0] == Catch::Approx(-1.0));
    for (double x : {-0.5, 0.5}) {
        CHECK(eval_generalized(sw, Vec{x}) ==
              Catch::Approx(eval_generalized(r, Vec{x})).margin(1e-12));
    }
    CHECK_THROWS_AS(switch_sides(r, 1), IndexOutOfRange);
}

TEST_CASE("switch_sides is an a.e. involution and keeps validity") {
    std::mt19937_64 rng(330);
    std::uniform_real_distribution<double> px(-2.0, 2.0);
    const GeneralizedResponse r = opposing_jumps_fixture();
    const GeneralizedResponse twice = switch_sides(switch_sides(r, 1), 1);
    for (int k = 0; k < 100; ++k) {
        Vec x{px(rng), px(rng)};
        if (std::abs(x[0] - 0.3) < 1e-9 || std::abs(x[0] + 0.3) < 1e-9) continue;
        CHECK(std::abs(eval_generalized(twice, x) - eval_generalized(r, x)) < 1e-12);
    }
    CHECK(validate(switch_sides(r, 0)).empty());
    CHECK(validate(twice).empty());
}

TEST_CASE("make_splits: canonical assignment on the opposing fixture") {
    const auto fd = find_dependence(opposing_jumps_fixture());
    REQUIRE(fd.has_value());
    const SplitParts sp = make_splits(fd->response, fd->dependence);
    CHECK(sp.bias == 0.0);
    CHECK(sp.parts[0].b_plus == Catch::Approx(1.0));
    CHECK(sp.parts[1].b_plus == Catch::Approx(0.5));
    CHECK(sp.parts[0].b_minus == 0.0);
    CHECK(norm_inf(sp.parts[0].delta_plus) == 0.0);
    CHECK(norm_inf(sp.parts[0].delta_minus) == 0.0);
}

TEST_CASE("make_splits parks a nonconstant affine part on the minus side") {
    GeneralizedResponse r = opposing_jumps_fixture();
    r.affine_linear = {2.0, 0.0};
    r.affine_const = 3.0;
    // Case (b) still holds: the jump normals stay dependent.
    REQUIRE(validate(r).empty());
    const auto fd = find_dependence(r);
    REQUIRE(fd.has_value());
    const SplitParts sp = make_splits(fd->response, fd->dependence);
    CHECK(sp.bias == Catch::Approx(3.0));
    CHECK(sp.parts[0].delta_minus[0] == Catch::Approx(2.0));
    CHECK(sp.parts[0].delta_plus[0] == Catch::Approx(2.0));

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> px(-2.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        Vec x{px(rng), px(rng)};
        if (std::abs(x[0] - 0.3) < 1e-8 || std::abs(x[0] + 0.3) < 1e-8) continue;
        CHECK(std::abs(eval_split_form(fd->response, fd->dependence, sp, x) -
                       eval_generalized(fd->response, x)) < 1e-10);
    }
}

TEST_CASE("q_values from the limiting segment formula") {
    const auto fd = find_dependence(opposing_jumps_fixture());
    REQUIRE(fd.has_value());
    const SplitParts sp = make_splits(fd->response, fd->dependence);

    // b+ = 1, b- = 0, alpha = 1: segment [-1, 0].
    const Vec on_h1{-0.3, 0.4};
    const QValues q = q_values(fd->response, 0, on_h1, fd->dependence, sp);
    CHECK(q.q_plus == Catch::Approx(0.0));
    CHECK(q.q_minus == Catch::Approx(1.0));

    CHECK_THROWS_AS(q_values(fd->response, 0, Vec{0.1, 0.4}, fd->dependence, sp),
                    OffBreakline);
}

TEST_CASE("q_values: continuous summand collapses the segment") {
    // b+ = b- = 0 gives t+ = t- and zero lengths.
    GeneralizedResponse r = opposing_jumps_fixture();
    r.summands[0].jump = 0.0;
    r.summands[1].jump = 0.0;
    const auto fd = find_dependence(r);
    REQUIRE(fd.has_value());
    const SplitParts sp = make_splits(fd->response, fd->dependence);
    const QValues q = q_values(fd->response, 0, Vec{-0.3, 0.0}, fd->dependence, sp);
    CHECK(q.q_plus == 0.0);
    CHECK(q.q_minus == 0.0);
}

TEST_CASE("q_values with asymmetric endpoints and larger coefficient") {
    // Direct check of the segment arithmetic: b+ = 1, b- = -1, alpha = 2
    // gives S = [-1/2, 1/2] and q+ = q- = 1/2.
    GeneralizedResponse r = opposing_jumps_fixture();
    DependenceVector dep{{0, 1}, {2.0, 2.0}};
    SplitParts sp;
    sp.bias = 0.0;
    sp.parts.resize(2);
    sp.parts[0].delta_plus = {0.0, 0.0};
    sp.parts[0].delta_minus = {0.0, 0.0};
    sp.parts[0].b_plus = 1.0;
    sp.parts[0].b_minus = -1.0;
    sp.parts[1] = sp.parts[0];
    const QValues q = q_values(r, 0, Vec{-0.3, 0.2}, dep, sp);
    CHECK(q.q_plus == Catch::Approx(0.5));
    CHECK(q.q_minus == Catch::Approx(0.5));
}

TEST_CASE("segment_average_loss on a quadratic") {
    const auto fd = find_dependence(opposing_jumps_fixture());
    REQUIRE(fd.has_value());
    const SplitParts sp = make_splits(fd->response, fd->dependence);
    const LossSpec loss = lp_loss(target_constant(2, 0.0), 2.0);

    // On H2 the off-summand value is 1 (first summand active), segment [1, 1.5].
    const Vec on_h2{0.3, -0.2};
    const SegmentLoss seg = segment_average_loss(loss, on_h2, fd->response, 1,
                                                 fd->dependence, sp, 64);
    CHECK(seg.l_minus == Catch::Approx(1.0));
    CHECK(seg.l_plus == Catch::Approx(2.25));
    // mean of y^2 over [1, 1.5] = (1.5^3 - 1^3) / (3 * 0.5)
    CHECK(seg.l_bar == Catch::Approx((3.375 - 1.0) / 1.5));
    // Strict midpoint inequality for distinct endpoints.
    CHECK(2.0 * seg.l_bar < seg.l_plus + seg.l_minus);
}

TEST_CASE("segment_average_loss with coincident endpoints") {
    GeneralizedResponse r = opposing_jumps_fixture();
    r.summands[0].jump = 0.0;
    r.summands[1].jump = 0.0;
    const auto fd = find_dependence(r);
    REQUIRE(fd.has_value());
    const SplitParts sp = make_splits(fd->response, fd->dependence);
    const LossSpec loss = lp_loss(target_constant(2, 0.75), 2.0);
    const SegmentLoss seg =
        segment_average_loss(loss, Vec{-0.3, 0.1}, fd->response, 0, fd->dependence, sp, 32);
    CHECK(seg.l_bar == seg.l_plus);
    CHECK(seg.l_bar == seg.l_minus);
}

TEST_CASE("kappa_perturb reproduces the response away from the slabs") {
    const auto fd = find_dependence(opposing_jumps_fixture());
    REQUIRE(fd.has_value());
    const SplitParts sp = make_splits(fd->response, fd->dependence);
    const BoxDomain box({-1, -1}, {1, 1});

    const EffectiveTuple plus = kappa_perturb(fd->response, fd->dependence, sp, 50.0, 1, box);
    CHECK(plus.neuron_count() == 4);

    const Vec far{0.9, 0.0};
    CHECK(std::abs(eval_tuple(plus, far) - eval_generalized(fd->response, far)) < 1e-10);
    const Vec left{-0.9, 0.3};
    CHECK(std::abs(eval_tuple(plus, left) - eval_generalized(fd->response, left)) < 1e-10);

    // Inside the slab of the first summand the values differ.
    const Vec inside_slab{-0.3 - 1.0 / 100.0, 0.0};
    CHECK(std::abs(eval_tuple(plus, inside_slab) -
                   eval_generalized(fd->response, inside_slab)) > 1e-3);

    CHECK_THROWS_AS(kappa_perturb(fd->response, fd->dependence, sp, 0.1, 1, box),
                    KappaTooSmall);
    CHECK_THROWS_AS(kappa_perturb(fd->response, fd->dependence, sp, 50.0, 2, box),
                    InvalidArgument);
}

TEST_CASE("kappa_perturb off-slab identity with safety margin") {
    const auto fd = find_dependence(opposing_jumps_fixture());
    REQUIRE(fd.has_value());
    const SplitParts sp = make_splits(fd->response, fd->dependence);
    const BoxDomain box({-1, -1}, {1, 1});
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> px(-1.0, 1.0);
    for (double kappa : {50.0, 200.0}) {
        const EffectiveTuple plus =
            kappa_perturb(fd->response, fd->dependence, sp, kappa, 1, box);
        const EffectiveTuple minus =
            kappa_perturb(fd->response, fd->dependence, sp, kappa, -1, box);
        // Slab footprint: |t| up to (max |t_pm| + 1) / kappa around each plane.
        const double guard = 2.5 / kappa;
        int checked = 0;
        while (checked < 200) {
            Vec x{px(rng), px(rng)};
            if (std::abs(x[0] + 0.3) < guard || std::abs(x[0] - 0.3) < guard) continue;
            const double want = eval_generalized(fd->response, x);
            CHECK(std::abs(eval_tuple(plus, x) - want) < 1e-10);
            CHECK(std::abs(eval_tuple(minus, x) - want) < 1e-10);
            ++checked;
        }
    }
}

TEST_CASE("limit_decrement matches the closed form on the opposing fixture") {
    const auto fd = find_dependence(opposing_jumps_fixture());
    REQUIRE(fd.has_value());
    const SplitParts sp = make_splits(fd->response, fd->dependence);
    const LossSpec loss = lp_loss(target_constant(2, 0.75), 2.0);
    const Measure m = uniform_square();

    const double expected = opposing_jumps_decrement_oracle();
    REQUIRE(expected == Catch::Approx(-0.1875));

    const double dec = limit_decrement(fd->response, fd->dependence, sp, loss, m,
                                       SurfaceRule{256});
    CHECK(dec == Catch::Approx(expected).margin(1e-9));
    CHECK(dec < 0.0);

    // Refinement stability.
    const double dec2 = limit_decrement(fd->response, fd->dependence, sp, loss, m,
                                        SurfaceRule{512});
    CHECK(std::abs(dec2 - dec) < 1e-6);
}

TEST_CASE("limit_decrement vanishes for continuous summands") {
    GeneralizedResponse r = opposing_jumps_fixture();
    // delta = kink * normal with jump = -kink * offset keeps each summand
    // continuous; q vanishes identically.
    r.summands[0].delta = {1.0, 0.0};
    r.summands[0].jump = 0.3;
    r.summands[1].delta = {-0.5, 0.0};
    r.summands[1].jump = 0.15;
    const auto fd = find_dependence(r);
    REQUIRE(fd.has_value());
    const SplitParts sp = make_splits(fd->response, fd->dependence);
    const LossSpec loss = lp_loss(target_constant(2, 0.75), 2.0);
    const double dec = limit_decrement(fd->response, fd->dependence, sp, loss,
                                       uniform_square(), SurfaceRule{64});
    CHECK(std::abs(dec) < 1e-12);
}

TEST_CASE("verify_improvement finds a strictly better finite perturbation") {
    const LossSpec loss = lp_loss(target_constant(2, 0.75), 2.0);
    const PerturbationReport report =
        verify_improvement(opposing_jumps_fixture(), loss, uniform_square(), {50.0, 100.0});
    CHECK(report.decrement < 0.0);
    REQUIRE(report.improving_kappa.has_value());
    CHECK(*report.improving_kappa == Catch::Approx(50.0));
    // With a constant target and uniform density the finite-kappa correction
    // vanishes identically: the scaled sums already sit on the limit.
    CHECK(report.scaled_sum[0] == Catch::Approx(report.decrement).margin(1e-10));
    CHECK(report.scaled_sum[1] == Catch::Approx(report.decrement).margin(1e-10));
}

TEST_CASE("scaled sums approach the limiting decrement for a varying target") {
    // A target with a slope along the jump normals makes the loss vary across
    // the perturbation slabs, so the finite-kappa deviation is genuinely
    // O(1/kappa) and shrinks along the grid.
    const LossSpec loss =
        lp_loss([](PointView x) { return 0.75 + 0.2 * x[0]; }, 2.0);
    const PerturbationReport report = verify_improvement(
        opposing_jumps_fixture(), loss, uniform_square(), {50.0, 100.0, 200.0});
    CHECK(report.decrement < 0.0);
    CHECK(report.improving_kappa.has_value());
    const double dev50 = std::abs(report.scaled_sum[0] - report.decrement);
    const double dev100 = std::abs(report.scaled_sum[1] - report.decrement);
    const double dev200 = std::abs(report.scaled_sum[2] - report.decrement);
    CHECK(dev50 > 1e-8); // the deviation is real, not noise
    CHECK(dev100 < dev50);
    CHECK(dev200 < dev100);
}

TEST_CASE("verify_improvement on a continuous response is trivial") {
    const EffectiveTuple t({UnitVector::normalized(Vec{1, 0})}, {0.1}, {1.5}, 0.2);
    const GeneralizedResponse r = tuple_to_generalized(t);
    const LossSpec loss = lp_loss(target_constant(2, 0.75), 2.0);
    const PerturbationReport report =
        verify_improvement(r, loss, uniform_square(), {50.0});
    CHECK(report.decrement == 0.0);
    CHECK_FALSE(report.improving_kappa.has_value());
    CHECK(report.err_plus[0] == report.err_r);
}

TEST_CASE("verify_improvement requires a strictly convex loss") {
    LossSpec l1;
    l1.pointwise = [](PointView, double y) { return std::abs(y - 0.5); };
    l1.metadata = {true, true, std::nullopt};
    CHECK_THROWS_AS(
        verify_improvement(opposing_jumps_fixture(), l1, uniform_square(), {50.0}),
        AuditFailed);
}

TEST_CASE("discontinuity_approximant telescopes to the jump") {
    const HalfSpace plane(UnitVector::normalized(Vec{1}), 0.0);
    const EffectiveTuple t = discontinuity_approximant(plane, 2.5, 10.0);
    REQUIRE(t.neuron_count() == 2);
    // Beyond the ramp band the value is exactly the jump.
    CHECK(eval_tuple(t, Vec{0.1}) == Catch::Approx(2.5));
    CHECK(eval_tuple(t, Vec{0.9}) == Catch::Approx(2.5));
    // On the inactive side it vanishes.
    CHECK(eval_tuple(t, Vec{-0.2}) == 0.0);
    CHECK_THROWS_AS(discontinuity_approximant(plane, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("discontinuity_approximant error decays like 1/t") {
    const Measure m = uniform_measure(BoxDomain({-1}, {1}));
    const HalfSpace plane(UnitVector::normalized(Vec{1}), 0.0);
    auto step = [&](PointView x) { return side(plane, x) == Side::inside ? 1.0 : 0.0; };
    LossSpec loss = lp_loss(ScalarField(step), 2.0);
    loss.target_kinks.push_back(plane);

    double prev = std::numeric_limits<double>::infinity();
    for (double t : {10.0, 100.0, 1000.0}) {
        const EffectiveTuple approx = discontinuity_approximant(plane, 1.0, t);
        std::vector<HalfSpace> lines = loss.target_kinks;
        for (std::size_t j = 0; j < approx.neuron_count(); ++j)
            lines.push_back(approx.activity(j));
        const double err = error_functional_piecewise(
            [&](PointView x) { return eval_tuple(approx, x); }, loss.pointwise, m, lines, 24);
        // Analytic value: ramp band of width 1/t with h = 1/2 integrates to 1/(6t).
        CHECK(err == Catch::Approx(1.0 / (6.0 * t)).margin(1e-9));
        CHECK(err < prev);
        prev = err;
    }
}
