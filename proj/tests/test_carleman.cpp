#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "jumpwave/carleman.hpp"

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

CarlemanWeight weight_at(double xs, double am, double ap, double beta) {
    CarlemanWeight w;
    w.alpha_minus = am;
    w.alpha_plus = ap;
    w.beta = beta;
    w.x0 = {xs, 0.0};
    return w;
}

// compactly supported space-time bump on one side of the interface
SidePair plus_side_bump(double xs, double r0, int nx_cells, int nt) {
    SidePair sp;
    sp.nx = nx_cells - 1;
    sp.ny = 1;
    sp.hx = 1.0 / nx_cells;
    sp.hy = 1.0;
    sp.origin = {sp.hx, 0.0};
    double t_half = 1.1 * r0;
    double dt = 2.0 * t_half / (nt - 1);
    sp.u_minus = SpaceTimeField::zeros(nt, sp.nx, dt, -t_half, 0);
    sp.u_plus = SpaceTimeField::zeros(nt, sp.nx, dt, -t_half, 0);
    double xc = xs + 0.4 * r0, sg = 0.15 * r0;
    for (int ix = 0; ix < sp.nx; ++ix) {
        double x = sp.origin.x + ix * sp.hx;
        for (int it = 0; it < nt; ++it) {
            double t = -t_half + it * dt;
            double rr = (t * t + (x - xs) * (x - xs)) / (0.8 * r0 * 0.8 * r0);
            if (rr >= 1.0) continue;
            double cut = std::exp(1.0 - 1.0 / (1.0 - rr * rr));
            sp.u_plus.at(ix, it) =
                cut * std::exp(-((x - xc) * (x - xc) + t * t) / (2 * sg * sg));
        }
    }
    return sp;
}

}  // namespace

TEST_CASE("weight and psi closed forms") {
    CarlemanWeight w = weight_at(0.5, 1.0, 2.0, 3.0);
    CHECK(phi(0.1, Side::Plus, w) == doctest::Approx(0.215).epsilon(1e-14));
    CHECK(phi(-0.1, Side::Minus, w) ==
          doctest::Approx(-0.085).epsilon(1e-14));
    CHECK(phi_prime(0.0, Side::Plus, w) == 2.0);
    CHECK(phi_prime(0.0, Side::Minus, w) == 1.0);
    w.delta_conv = 0.5;
    // psi subtracts the space-time square distance from the center
    CHECK(psi(0.2, {0.6, 0.0}, w) ==
          doctest::Approx(phi(0.1, Side::Plus, w) - 0.5 * (0.04 + 0.01))
              .epsilon(1e-14));
    CHECK_THROWS_AS(weight_at(0.5, 2.0, 1.0, 1.0).validate(), ValidationError);
}

TEST_CASE("convexification level-set inclusion") {
    CarlemanWeight w = weight_at(0.5, 1.0, 2.0, 1.0);
    w.delta_conv = 1.0;
    CHECK(check_convexification(w, 0.5, 5e-3));
    // delta above delta_conv R^2/40 violates the precondition
    CHECK_THROWS_AS(check_convexification(w, 0.5, 1e-2), ValidationError);
}

TEST_CASE("classifier worked examples (c-=1, c+=4)") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    Vec2 x{0.5, 0.0};
    RegionTags t10 = classify({x, 1.0, 0.0, 1.0}, m, 0.4);
    CHECK(t10.E_minus);
    CHECK(t10.E_plus);
    RegionTags t01 = classify({x, 0.0, 1.0, 1.0}, m, 0.1);
    CHECK(t01.GH_minus);
    CHECK(t01.GH_plus);
    CHECK_FALSE(t01.E_minus);
    CHECK_FALSE(t01.E_plus);
    RegionTags t11 = classify({x, 1.0, 1.0, 1.0}, m, 0.1);
    CHECK(t11.GH_minus);
    CHECK(t11.E_plus);
    CHECK_FALSE(t11.E_minus);
    CHECK_FALSE(t11.GH_plus);
    EllipticRoots roots = compute_m({x, 1.0, 1.0, 1.0}, m, 0.1);
    CHECK_FALSE(roots.m_minus.has_value());
    REQUIRE(roots.m_plus.has_value());
    CHECK(*roots.m_plus == doctest::Approx(std::sqrt(0.75)).epsilon(1e-14));
    CHECK_THROWS_AS(classify({x, 0.0, 0.0, 1.0}, m, 0.1), ValidationError);
}

TEST_CASE("m is degree-1 homogeneous and tags are scale invariant") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    Vec2 x{0.5, 0.0};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        double xp = uni(rng), xt = uni(rng);
        if (xp == 0.0 && xt == 0.0) continue;
        RegionTags a = classify({x, xp, xt, 1.0}, m, 0.1);
        RegionTags b = classify({x, 3.0 * xp, 3.0 * xt, 1.0}, m, 0.1);
        CHECK(a.E_minus == b.E_minus);
        CHECK(a.E_plus == b.E_plus);
        CHECK(a.GH_minus == b.GH_minus);
        CHECK(a.GH_plus == b.GH_plus);
        EllipticRoots r1 = compute_m({x, xp, xt, 1.0}, m, 0.1);
        EllipticRoots r3 = compute_m({x, 3.0 * xp, 3.0 * xt, 1.0}, m, 0.1);
        if (r1.m_plus) {
            REQUIRE(r3.m_plus);
            CHECK(std::abs(*r3.m_plus - 3.0 * *r1.m_plus) <=
                  1e-12 * (1.0 + *r3.m_plus));
        }
    }
}

TEST_CASE("factor symbols: worked example and identities") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    CarlemanWeight w = weight_at(0.5, 1.0, 2.0, 1.0);
    MicrolocalPoint p{{0.5, 0.0}, 1.0, 0.0, 10.0};
    FactorSymbols f = factors(p, w, m, 0.1);
    REQUIRE(f.e_plus);
    REQUIRE(f.f_plus);
    CHECK(*f.e_plus == doctest::Approx(21.0).epsilon(1e-14));
    CHECK(*f.f_plus == doctest::Approx(19.0).epsilon(1e-14));
    // identities e - f = 2m, e + f = 2 tau phi'
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    std::uniform_real_distribution<double> upos(1.0, 30.0);
    for (int trial = 0; trial < 200; ++trial) {
        MicrolocalPoint q{{0.5 + 0.02 * uni(rng), 0.0}, uni(rng), uni(rng),
                          upos(rng)};
        if (q.lambda_sq() == 0.0) continue;
        FactorSymbols g = factors(q, w, m, 0.1);
        double xn = q.x.x - w.x0.x;
        if (g.m_plus) {
            CHECK(std::abs(*g.e_plus - *g.f_plus - 2.0 * *g.m_plus) <= 1e-12);
            CHECK(std::abs(*g.e_plus + *g.f_plus -
                           2.0 * q.tau * phi_prime(xn, Side::Plus, w)) <=
                  1e-12 * q.tau);
        }
        if (g.m_minus) {
            CHECK(std::abs(*g.e_minus - *g.f_minus - 2.0 * *g.m_minus) <=
                  1e-12);
        }
    }
    // f_- changes sign as tau crosses m_-/phi'
    MicrolocalPoint lo{{0.5, 0.0}, 1.0, 0.0, 0.5};
    MicrolocalPoint hi{{0.5, 0.0}, 1.0, 0.0, 2.0};
    CHECK(*factors(lo, w, m, 0.1).f_minus < 0.0);
    CHECK(*factors(hi, w, m, 0.1).f_minus > 0.0);
}

TEST_CASE("geometric alpha ratio: analytic values") {
    // no jump: sup over the elliptic intersection is exactly 1
    MediumSpec flat = medium_1d(0.5, 2.0, 2.0);
    CHECK(geometric_alpha_ratio(flat, 0.1) ==
          doctest::Approx(1.0).epsilon(1e-9));
    // c- = 1, c+ = 4, eps = 0.1: boundary saturation gives sqrt(4.375)
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    double r = geometric_alpha_ratio(m, 0.1);
    CHECK(r == doctest::Approx(std::sqrt(4.375)).epsilon(1e-6));
    // refinement never decreases the running sup
    CHECK(geometric_alpha_ratio(m, 0.1, 40000) >= r - 1e-9);
    // eps too large: elliptic regions cannot intersect
    CHECK_THROWS_AS(geometric_alpha_ratio(m, 1.5), ValidationError);
}

TEST_CASE("gamma cover: no-jump example holds, starved slope fails") {
    MediumSpec flat = medium_1d(0.5, 1.0, 1.0);
    GammaCoverGrid grid;
    grid.sphere_points = 180;
    CarlemanWeight ok = weight_at(0.5, 1.0, 2.0, 1.0);
    GammaCoverReport pass = check_gamma_cover(ok, flat, 0.1, 1.1, 1.3, grid);
    CHECK(pass.cover_holds);
    CHECK(pass.C > 0.0);
    CHECK(pass.tau0 >= 1.0);

    // slope ratio 1.05 < mu0: the minus factor cannot stay negative
    CarlemanWeight bad = weight_at(0.5, 1.0, 1.05, 1.0);
    GammaCoverReport fail = check_gamma_cover(bad, flat, 0.1, 1.1, 1.3, grid);
    CHECK_FALSE(fail.cover_holds);
    CHECK(fail.has_witness);
    CHECK_FALSE(fail.failure.empty());

    CHECK_THROWS_AS(check_gamma_cover(ok, flat, 0.1, 1.3, 1.1, grid),
                    ValidationError);
}

TEST_CASE("subellipticity margin: positive for beta >= 1, vanishes with beta") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    double ratio = geometric_alpha_ratio(m, 0.1);
    GammaCoverGrid grid;
    grid.sphere_points = 180;
    CarlemanWeight w = weight_at(0.5, 1.0, 1.3 * 1.3 * ratio, 1.0);
    double margin = check_subellipticity(w, m, 0.1, 1.1, grid);
    CHECK(margin > 0.0);
    // constant coefficients: d/dx_n m = 0, so at an f_+ = 0 point the bracket
    // is tau^2 beta / lambda_tau^2, linear in beta
    MicrolocalPoint p{{0.5, 0.0}, 1.0, 0.0, 0.0};
    p.tau = 1.0 / phi_prime(0.0, Side::Plus, w);  // tau phi' = m = 1
    double b1 = subellipticity_bracket(p, w, m, 0.1, 1.1);
    CarlemanWeight w2 = w;
    w2.beta = 2.0;
    double b2 = subellipticity_bracket(p, w2, m, 0.1, 1.1);
    CHECK(b2 / b1 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("carleman quadrature: zero data, positivity, quadratic scaling") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    CarlemanWeight w = weight_at(0.5, 1.0, 3.0, 4.0);
    CarlemanConfig cfg;
    cfg.r0 = 0.2;
    cfg.d = 8.0 * cfg.delta;
    SidePair zero = plus_side_bump(0.5, cfg.r0, 65, 48);
    for (double& v : zero.u_plus.data) v = 0.0;
    CarlemanBreakdown z = carleman_sides(zero, {}, w, 4.0, cfg, m);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);

    SidePair bump = plus_side_bump(0.5, cfg.r0, 65, 48);
    CarlemanBreakdown b = carleman_sides(bump, {}, w, 4.0, cfg, m);
    CHECK(b.lhs > 0.0);
    CHECK(b.rhs > 0.0);
    CHECK(b.T_theta == 0.0);
    CHECK(std::isfinite(b.lhs));

    SidePair twice = bump;
    for (double& v : twice.u_plus.data) v *= 2.0;
    CarlemanBreakdown b2 = carleman_sides(twice, {}, w, 4.0, cfg, m);
    CHECK(b2.lhs == doctest::Approx(4.0 * b.lhs).epsilon(1e-12));
    CHECK(b2.rhs == doctest::Approx(4.0 * b.rhs).epsilon(1e-12));

    // support escaping the ball is rejected
    SidePair wide = bump;
    wide.u_plus.at(wide.nx - 1, 0) = 1.0;
    CHECK_THROWS_AS(carleman_sides(wide, {}, w, 4.0, cfg, m), ValidationError);
}

TEST_CASE("transmission residual traces are exact on quadratics") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    SidePair sp = plus_side_bump(0.5, 0.2, 65, 8);
    for (int ix = 0; ix < sp.nx; ++ix) {
        double x = sp.origin.x + ix * sp.hx;
        for (std::size_t it = 0; it < sp.u_minus.nt; ++it) {
            sp.u_minus.at(ix, it) = x * x;        // trace 0.25, slope 1
            sp.u_plus.at(ix, it) = 2.0 * x * x;   // trace 0.5, slope 2
        }
    }
    TransmissionData td = transmission_residuals(sp, m);
    for (std::size_t i = 0; i < td.theta.size(); ++i) {
        CHECK(td.theta[i] == doctest::Approx(-0.25).epsilon(1e-12));
        // Theta = c_m * 2*x_s - c_p * 4*x_s = 1 - 8 = -7
        CHECK(td.Theta[i] == doctest::Approx(-7.0).epsilon(1e-12));
    }
}

TEST_CASE("certification: zero family degenerate, bump family finite") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    double ratio = geometric_alpha_ratio(m, 0.1);
    CarlemanWeight w = weight_at(0.5, 1.0, 1.3 * 1.3 * ratio, 1.0);
    CarlemanConfig cfg;
    cfg.r0 = 0.2;
    cfg.d = 8.0 * cfg.delta;

    SidePair zero = plus_side_bump(0.5, cfg.r0, 65, 48);
    for (double& v : zero.u_plus.data) v = 0.0;
    auto degenerate = carleman_certify({zero}, w, cfg, {4.0}, m);
    REQUIRE(degenerate.size() == 1);
    CHECK(degenerate[0].degenerate);

    SidePair bump = plus_side_bump(0.5, cfg.r0, 65, 48);
    auto rows = carleman_certify({bump}, w, cfg, {4.0, 8.0}, m);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK_FALSE(r.degenerate);
        CHECK(std::isfinite(r.C));
        CHECK(r.C > 0.0);
    }
}
