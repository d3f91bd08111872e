#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "jumpwave/control.hpp"

using namespace jumpwave;

namespace {

MediumSpec medium_1d(double xs, double cm, double cp) {
    MediumSpec m;
    m.domain.kind = Domain::Kind::Interval1D;
    m.interface.kind = InterfaceSpec::Kind::Point1D;
    m.interface.point = xs;
    m.coefficient = PiecewiseCoefficient::constants(cm, cp);
    return m;
}

MediumSpec medium_2d(double x1, double y1, double xs, double cm, double cp) {
    MediumSpec m;
    m.domain.kind = Domain::Kind::Rectangle2D;
    m.domain.x1 = x1;
    m.domain.y1 = y1;
    m.interface = InterfaceSpec::vertical_line(xs, 0.0, y1);
    m.interface.kind = InterfaceSpec::Kind::Polyline2D;
    m.coefficient = PiecewiseCoefficient::constants(cm, cp);
    return m;
}

LevelField random_levels(const DiscreteOperator& A, std::size_t levels,
                         double dt, std::uint64_t seed) {
    LevelField f = zero_levels(A, levels, dt);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (double& v : f.data) v = uni(rng);
    return f;
}

std::vector<WaveState> mode_ensemble(const DiscreteOperator& A,
                                     const Spectrum& sp, std::size_t k) {
    std::vector<WaveState> out(k);
    for (std::size_t j = 0; j < k; ++j) {
        out[j].u.assign(sp.vec(j), sp.vec(j) + A.n);
        out[j].v.assign(A.n, 0.0);
    }
    return out;
}

}  // namespace

TEST_CASE("adjoint_terminal is the exact transpose of forward_terminal") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    DiscreteOperator A = assemble(m, GridSpec{33, 0});
    const std::size_t levels = 11;
    const double dt = 0.3 * cfl_limit(A);
    LevelField g = random_levels(A, levels, dt, 3);
    std::vector<double> y, v;
    forward_terminal(g, A, y, v);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> p(A.n), q(A.n);
    for (std::size_t i = 0; i < A.n; ++i) {
        p[i] = uni(rng);
        q[i] = uni(rng);
    }
    LevelField gt = adjoint_terminal(p, q, A, levels, dt);

    double lhs = 0.0;
    for (std::size_t i = 0; i < A.n; ++i) lhs += y[i] * p[i] + v[i] * q[i];
    double rhs = 0.0;
    for (std::size_t n = 0; n < levels; ++n)
        for (std::size_t i = 0; i < A.n; ++i) rhs += g.at(n, i) * gt.at(n, i);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("penalized objective: directional derivative vs finite differences") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    DiscreteOperator A = assemble(m, GridSpec{49, 0});
    const std::size_t levels = 25;
    const double dt = 0.4 * cfl_limit(A);
    const double eps_hat = 0.05;
    const double cv = A.cell_volume;

    std::vector<double> time_w(levels);
    for (std::size_t n = 0; n < levels; ++n)
        time_w[n] = ((n == 0 || n + 1 == levels) ? 0.5 : 1.0) * dt * cv;
    auto inner_w = [&](const LevelField& a, const LevelField& b) {
        double total = 0.0;
        for (std::size_t n = 0; n < levels; ++n) {
            double acc = 0.0;
            for (std::size_t i = 0; i < A.n; ++i)
                acc += a.at(n, i) * b.at(n, i);
            total += time_w[n] * acc;
        }
        return total;
    };
    auto J = [&](const LevelField& F) {
        std::vector<double> y, v;
        forward_terminal(F, A, y, v);
        std::vector<double> z = apply_inverse(A, v, 1e-13);
        double term = 0.0;
        for (std::size_t i = 0; i < A.n; ++i) term += y[i] * y[i] + v[i] * z[i];
        return 0.5 * inner_w(F, F) + 0.5 * cv * term / eps_hat;
    };

    LevelField F = random_levels(A, levels, dt, 11);
    LevelField d = random_levels(A, levels, dt, 13);
    // analytic derivative: <F, d>_W + (1/eps) <(y,v), (y_d, v_d)>_{L2 x H^-1}
    std::vector<double> y, v, yd, vd;
    forward_terminal(F, A, y, v);
    forward_terminal(d, A, yd, vd);
    std::vector<double> z = apply_inverse(A, v, 1e-13);
    double cross = 0.0;
    for (std::size_t i = 0; i < A.n; ++i)
        cross += y[i] * yd[i] + z[i] * vd[i];
    double exact = inner_w(F, d) + cv * cross / eps_hat;

    const double h = 1e-5;
    LevelField Fp = F, Fm = F;
    for (std::size_t k = 0; k < F.data.size(); ++k) {
        Fp.data[k] += h * d.data[k];
        Fm.data[k] -= h * d.data[k];
    }
    double fd = (J(Fp) - J(Fm)) / (2.0 * h);
    CHECK(fd == doctest::Approx(exact).epsilon(1e-5));
}

TEST_CASE("hum_control reaches the target and decreases J") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    DiscreteOperator A = assemble(m, GridSpec{129, 0});
    Spectrum sp = eigendecompose(A, 2);
    WaveState init;
    init.u.assign(sp.vec(0), sp.vec(0) + A.n);
    init.v.assign(A.n, 0.0);

    ControlProblem prob;
    prob.omega = interval_mask(A, 0.3, 0.7);
    prob.T = 2.0;
    prob.eps_ctl = 0.3;
    HumResult res = hum_control(init, prob, A);
    CHECK(res.achieved);
    CHECK(res.achieved_ratio <= prob.eps_ctl);
    CHECK(res.cost > 0.0);
    for (std::size_t i = 1; i < res.J_history.size(); ++i)
        CHECK(res.J_history[i] <= res.J_history[i - 1] * (1.0 + 1e-12));
    // control is supported on the mask
    for (std::size_t n = 0; n < res.control.levels; ++n)
        for (std::size_t i = 0; i < A.n; ++i)
            if (!prob.omega.mask[i]) CHECK(res.control.at(n, i) == 0.0);
}

TEST_CASE("hum_control on zero data is trivially achieved") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    DiscreteOperator A = assemble(m, GridSpec{65, 0});
    WaveState init;
    init.u.assign(A.n, 0.0);
    init.v.assign(A.n, 0.0);
    ControlProblem prob;
    prob.omega = interval_mask(A, 0.3, 0.7);
    prob.T = 1.0;
    HumResult res = hum_control(init, prob, A);
    CHECK(res.achieved);
    CHECK(res.cost == 0.0);
}

TEST_CASE("quant_uc_check: feasibility and the time-threshold flag") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    DiscreteOperator A = assemble(m, GridSpec{257, 0});
    Spectrum sp = eigendecompose(A, 6);
    std::vector<WaveState> ens = mode_ensemble(A, sp, 6);
    std::vector<double> mu = {1.0, 2.0, 4.0, 8.0};
    const double L = 0.65;  // analytic L(M, omega) for omega = (0, 0.1)

    ControlProblem prob;
    prob.omega = interval_mask(A, 0.0, 0.1);
    prob.T = 1.5;  // above 2L = 1.3
    ObservabilityReport rep = quant_uc_check(ens, prob, mu, 1.0, A, sp, L);
    CHECK(rep.all_feasible);
    CHECK_FALSE(rep.time_below_threshold);
    CHECK(rep.C.size() == mu.size());
    for (double c : rep.C) {
        CHECK(c > 0.0);
        CHECK(std::isfinite(c));
    }

    prob.T = 0.5;  // below the threshold: flagged, still feasible
    ObservabilityReport warn = quant_uc_check(ens, prob, mu, 1.0, A, sp, L);
    CHECK(warn.time_below_threshold);

    std::vector<WaveState> with_zero = ens;
    with_zero.push_back(WaveState{std::vector<double>(A.n, 0.0),
                                  std::vector<double>(A.n, 0.0), 0.0});
    CHECK_THROWS_AS(quant_uc_check(with_zero, prob, mu, 1.0, A, sp, L),
                    ValidationError);
}

TEST_CASE("stability_check produces finite fitted constants") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    DiscreteOperator A = assemble(m, GridSpec{257, 0});
    Spectrum sp = eigendecompose(A, 8);
    std::vector<WaveState> ens = mode_ensemble(A, sp, 8);
    ControlProblem prob;
    prob.omega = interval_mask(A, 0.0, 0.1);
    prob.T = 1.5;
    StabilityReport rep = stability_check(ens, prob, A, sp);
    CHECK(rep.C_exponential > 0.0);
    CHECK(std::isfinite(rep.C_exponential));
    CHECK(rep.C_log > 0.0);
    CHECK(rep.binding_member < ens.size());
    CHECK(rep.skipped_zero_observation == 0);
}

TEST_CASE("cost_curve: validation and monotone shape on a small case") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    DiscreteOperator A = assemble(m, GridSpec{97, 0});
    Spectrum sp = eigendecompose(A, 1);
    WaveState init;
    init.u.assign(sp.vec(0), sp.vec(0) + A.n);
    init.v.assign(A.n, 0.0);
    ControlProblem prob;
    prob.omega = interval_mask(A, 0.35, 0.65);
    prob.T = 2.0;

    CHECK_THROWS_AS(cost_curve(init, prob, {0.1, 0.5}, A), ValidationError);
    CHECK_THROWS_AS(cost_curve(init, prob, {1.5, 0.5}, A), ValidationError);

    CostCurve curve = cost_curve(init, prob, {0.5, 0.25, 0.1}, A);
    REQUIRE(curve.cost.size() == 3);
    CHECK(curve.cost[1] >= curve.cost[0] * (1.0 - 1e-9));
    CHECK(curve.cost[2] >= curve.cost[1] * (1.0 - 1e-9));
}

TEST_CASE("trapping: normal incidence matches the matching-condition oracle") {
    // wide fast side so the transmitted packet never reaches the far wall,
    // tall domain and k*sigma ~ 7 so beam diffraction stays negligible
    MediumSpec m = medium_2d(2.5, 2.8, 0.75, 1.0, 4.0);
    TrappingReport rep = trapping_demo(m, 0.0, 12.0, GridSpec{625, 700});
    // R = (cm k - cp k/2)/(cm k + cp k/2) = -1/3: energy 1/9 back, 8/9 through
    CHECK(rep.analytic_reflected == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
    CHECK(rep.analytic_transmitted ==
          doctest::Approx(8.0 / 9.0).epsilon(1e-12));
    CHECK(rep.critical_angle ==
          doctest::Approx(std::asin(0.5)).epsilon(1e-12));
    CHECK_FALSE(rep.evanescent);
    CHECK(std::abs(rep.transmitted_fraction - rep.analytic_transmitted) <=
          0.01);
    CHECK(std::abs(rep.reflected_fraction + rep.transmitted_fraction +
                   rep.residual_fraction - 1.0) <= 1e-3);
}

TEST_CASE("trapping: beyond the critical angle the fast side stays dark") {
    MediumSpec m = medium_2d(2.5, 3.4, 1.25, 1.0, 4.0);
    double angle = 45.0 * std::numbers::pi / 180.0;  // critical is 30 deg
    TrappingReport rep = trapping_demo(m, angle, 20.0, GridSpec{1001, 1360});
    CHECK(rep.evanescent);
    CHECK(rep.analytic_transmitted == 0.0);
    CHECK(rep.transmitted_fraction <= 1e-2);
    CHECK(rep.reflected_fraction >= 0.9);
}

TEST_CASE("trapping: geometry validation") {
    MediumSpec m1 = medium_1d(0.5, 1.0, 4.0);
    CHECK_THROWS_AS(trapping_demo(m1, 0.0, 6.0, GridSpec{65, 0}),
                    ValidationError);
    MediumSpec m = medium_2d(2.0, 1.0, 1.0, 1.0, 4.0);
    CHECK_THROWS_AS(trapping_demo(m, -0.1, 6.0, GridSpec{64, 32}),
                    ValidationError);
    CHECK_THROWS_AS(trapping_demo(m, 0.0, 0.0, GridSpec{64, 32}),
                    ValidationError);
}
