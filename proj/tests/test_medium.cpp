#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "jumpwave/medium.hpp"

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

MediumSpec medium_2d(double xs, double cm, double cp) {
    MediumSpec m;
    m.domain.kind = Domain::Kind::Rectangle2D;
    m.interface = InterfaceSpec::vertical_line(xs, 0.0, 1.0);
    m.interface.kind = InterfaceSpec::Kind::Polyline2D;
    m.coefficient = PiecewiseCoefficient::constants(cm, cp);
    return m;
}

// brute-force Fermat oracle for a straight vertical interface: golden-section
// over the single crossing ordinate
double fermat_oracle(Vec2 a, Vec2 b, double xs, double cm, double cp) {
    auto len = [&](double y) {
        double da = std::hypot(xs - a.x, y - a.y) / std::sqrt(cm);
        double db = std::hypot(b.x - xs, b.y - y) / std::sqrt(cp);
        return da + db;
    };
    double lo = 0.0, hi = 1.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    for (int it = 0; it < 200; ++it) {
        if (len(c) < len(d)) {
            hi = d;
            d = c;
            c = hi - gr * (hi - lo);
        } else {
            lo = c;
            c = d;
            d = lo + gr * (hi - lo);
        }
    }
    return len(0.5 * (lo + hi));
}

}  // namespace

TEST_CASE("vertical interface orientation: minus side is x < xs") {
    MediumSpec m = medium_2d(0.5, 1.0, 4.0);
    CHECK(m.interface.side_of({0.25, 0.3}) == -1);
    CHECK(m.interface.side_of({0.75, 0.3}) == +1);
    CHECK(m.interface.side_of({0.5, 0.3}) == 0);
    CHECK(eval_c(m, {0.25, 0.3}) == 1.0);
    CHECK(eval_c(m, {0.75, 0.3}) == 4.0);
}

TEST_CASE("eval_c resolves sides and rejects ambiguity") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    CHECK(eval_c(m, {0.25, 0.0}) == 1.0);
    CHECK(eval_c(m, {0.75, 0.0}) == 4.0);
    CHECK(eval_c(m, {0.5, 0.0}, Side::Plus) == 4.0);
    CHECK(eval_c(m, {0.5, 0.0}, Side::Minus) == 1.0);
    CHECK_THROWS_AS(eval_c(m, {0.5, 0.0}, Side::Auto), ValidationError);
    CHECK_THROWS_AS(eval_c(m, {1.5, 0.0}), ValidationError);
}

TEST_CASE("path_length analytic values") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    CHECK(path_length({{0.0, 0.0}, {0.5, 0.0}}, m) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(path_length({{0.0, 0.0}, {1.0, 0.0}}, m) ==
          doctest::Approx(0.75).epsilon(1e-12));
    CHECK(path_length({{0.6, 0.0}, {0.9, 0.0}}, m) ==
          doctest::Approx(0.15).epsilon(1e-12));
    CHECK_THROWS_AS(path_length({}, m), ValidationError);
}

TEST_CASE("1D distance oracle 0.75") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    DistanceOptions opt;
    opt.resolution = 1.0 / 4096.0;
    CHECK(distance({0.0, 0.0}, {1.0, 0.0}, m, opt) ==
          doctest::Approx(0.75).epsilon(1e-3));
    CHECK(distance({0.3, 0.0}, {0.3, 0.0}, m, opt) ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("1D largest distance 0.65 (omega = (0,0.1))") {
    MediumSpec m = medium_1d(0.5, 1.0, 4.0);
    DistanceOptions opt;
    opt.resolution = 1.0 / 4096.0;
    double L = largest_distance([](Vec2 x) { return x.x <= 0.1; }, m, opt);
    CHECK(L == doctest::Approx(0.65).epsilon(1e-3));
}

TEST_CASE("distance symmetry") {
    MediumSpec m = medium_2d(0.5, 1.0, 4.0);
    DistanceOptions opt;
    opt.resolution = 1.0 / 64.0;
    opt.stencil_radius = 8;
    Vec2 a{0.2, 0.3}, b{0.8, 0.75};
    double dab = distance(a, b, m, opt);
    double dba = distance(b, a, m, opt);
    CHECK(std::abs(dab - dba) <= 1e-10);
}

TEST_CASE("2D two-layer distance vs Fermat crossing-point oracle") {
    MediumSpec m = medium_2d(0.5, 1.0, 4.0);
    Vec2 a{0.25, 0.3}, b{0.8, 0.7};
    double oracle = fermat_oracle(a, b, 0.5, 1.0, 4.0);
    DistanceOptions opt;
    opt.resolution = 1.0 / 128.0;
    opt.stencil_radius = 12;
    double d = distance(a, b, m, opt);
    CHECK(d == doctest::Approx(oracle).epsilon(4e-3));
    CHECK(d >= oracle - 1e-9);  // graph paths are admissible, never shorter
}

TEST_CASE("crossings of a segment through the interface") {
    MediumSpec m = medium_2d(0.5, 1.0, 4.0);
    auto cr = m.interface.crossings({0.25, 0.2}, {0.75, 0.6});
    REQUIRE(cr.size() == 1);
    CHECK(cr[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.interface.crossings({0.1, 0.2}, {0.3, 0.6}).empty());
}

TEST_CASE("validation rejects bad geometry") {
    MediumSpec m = medium_1d(1.5, 1.0, 4.0);  // interface outside the domain
    CHECK_THROWS_AS(m.validate(), ValidationError);
    MediumSpec ok = medium_1d(0.5, 1.0, 4.0);
    CHECK_NOTHROW(ok.validate());
    DistanceOptions bad;
    bad.resolution = -1.0;
    CHECK_THROWS_AS(distance({0, 0}, {1, 0}, ok, bad), ValidationError);
}
