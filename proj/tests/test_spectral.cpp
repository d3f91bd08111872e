#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "jumpwave/spectral.hpp"

using namespace jumpwave;

namespace {

TimeSignal smooth_signal(std::size_t n, double dt, double lambda) {
    TimeSignal f;
    f.dt = dt;
    f.t0 = -0.5 * dt * static_cast<double>(n - 1);
    f.padding = required_padding(lambda, dt);
    f.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double t = f.t0 + dt * static_cast<double>(i);
        f.samples[i] = std::exp(-8.0 * t * t) * (1.0 + 0.3 * std::sin(9.0 * t));
    }
    return f;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace

TEST_CASE("multiplier profile: exact plateau and support, smooth in between") {
    MultiplierProfile prof;
    CHECK(prof.value(0.0) == 1.0);
    CHECK(prof.value(0.75) == 1.0);
    CHECK(prof.value(-0.6) == 1.0);
    CHECK(prof.value(1.0) == 0.0);
    CHECK(prof.value(-1.4) == 0.0);
    double mid = prof.value(0.9);
    CHECK(mid > 0.0);
    CHECK(mid < 1.0);
    CHECK(prof.value(0.9) == prof.value(-0.9));  // even
    CHECK(prof.value(0.8) > prof.value(0.95));   // monotone on the blend
}

TEST_CASE("fft regularization matches direct kernel quadrature <= 1e-8") {
    double lambda = 16.0;
    TimeSignal f = smooth_signal(512, 0.01, lambda);
    TimeSignal fft = gaussian_regularize(f, lambda);
    TimeSignal quad = gaussian_regularize_quadrature(f, lambda);
    CHECK(max_abs_diff(fft.samples, quad.samples) <= 1e-8);
}

TEST_CASE("regularization of a gaussian has the closed form") {
    double lambda = 25.0;
    double sigma = 0.3;
    TimeSignal f;
    f.dt = 0.01;
    f.t0 = -3.0;
    f.padding = required_padding(lambda, f.dt);
    f.samples.resize(601);
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
        double t = f.t0 + f.dt * static_cast<double>(i);
        f.samples[i] = std::exp(-t * t / (2.0 * sigma * sigma));
    }
    TimeSignal g = gaussian_regularize(f, lambda);
    // multiplier e^{-xi^2/lambda} convolves with a gaussian of variance
    // 2/lambda: widths add, amplitude scales by sigma/sigma'
    double s2 = sigma * sigma + 2.0 / lambda;
    for (std::size_t i = 0; i < g.samples.size(); ++i) {
        double t = f.t0 + f.dt * static_cast<double>(i);
        double exact = sigma / std::sqrt(s2) * std::exp(-t * t / (2.0 * s2));
        CHECK(g.samples[i] == doctest::Approx(exact).scale(1.0).epsilon(1e-8));
    }
}

TEST_CASE("gaussian semigroup composition law <= 1e-10") {
    double l1 = 30.0, l2 = 20.0;
    double l12 = 1.0 / (1.0 / l1 + 1.0 / l2);
    TimeSignal f = smooth_signal(512, 0.01, l12);
    TimeSignal two = gaussian_regularize(gaussian_regularize(f, l1), l2);
    TimeSignal one = gaussian_regularize(f, l12);
    CHECK(max_abs_diff(two.samples, one.samples) <= 1e-10);
}

TEST_CASE("band localization keeps the plateau, kills beyond the support") {
    double mu = 40.0;
    double sigma = 1.0;  // spectral width ~ 1
    TimeSignal base;
    base.dt = 0.005;
    base.t0 = -7.0;  // envelope below 3e-11 at the window edge
    base.padding = 0;
    base.samples.resize(2801);
    auto fill = [&](double omega) {
        for (std::size_t i = 0; i < base.samples.size(); ++i) {
            double t = base.t0 + base.dt * static_cast<double>(i);
            base.samples[i] =
                std::exp(-t * t / (2.0 * sigma * sigma)) * std::cos(omega * t);
        }
    };
    fill(0.4 * mu);  // inside the plateau, spectrum within |s| <= 0.75
    TimeSignal kept = band_localize(base, mu);
    CHECK(max_abs_diff(kept.samples, base.samples) <= 1e-6);

    fill(1.6 * mu);  // beyond the support
    TimeSignal killed = band_localize(base, mu);
    double worst = 0.0;
    for (double v : killed.samples) worst = std::max(worst, std::abs(v));
    CHECK(worst <= 1e-6);
}

TEST_CASE("insufficient padding for the gaussian tail is rejected") {
    double lambda = 4.0;
    TimeSignal f = smooth_signal(256, 0.01, lambda);
    f.padding = 0;  // kernel std ~ 0.7, signal only 2.56 long: wraparound
    CHECK_THROWS_AS(gaussian_regularize(f, lambda), ValidationError);
    f.padding = required_padding(lambda, f.dt);
    CHECK_NOTHROW(gaussian_regularize(f, lambda));
}

TEST_CASE("Qphi with constant phi reduces to scaled regularization") {
    double tau = 4.0, delta = 0.5;
    double lambda = 2.0 * tau / delta;
    std::size_t nt = 256, nspace = 3;
    double dt = 0.01;
    SpaceTimeField u = SpaceTimeField::zeros(nt, nspace, dt, -1.28,
                                             required_padding(lambda, dt));
    for (std::size_t ix = 0; ix < nspace; ++ix)
        for (std::size_t it = 0; it < nt; ++it) {
            double t = u.t0 + dt * static_cast<double>(it);
            u.at(ix, it) = std::exp(-10.0 * t * t) * std::sin(3.0 * t + ix);
        }
    std::vector<double> phi_const(nspace, 0.2);
    SpaceTimeField q = apply_Qphi(u, tau, delta, phi_const);
    for (std::size_t ix = 0; ix < nspace; ++ix) {
        TimeSignal row;
        row.dt = dt;
        row.t0 = u.t0;
        row.padding = u.padding;
        row.samples.resize(nt);
        for (std::size_t it = 0; it < nt; ++it)
            row.samples[it] = std::exp(tau * 0.2) * u.at(ix, it);
        TimeSignal ref = gaussian_regularize(row, lambda);
        for (std::size_t it = 0; it < nt; ++it)
            CHECK(q.at(ix, it) ==
                  doctest::Approx(ref.samples[it]).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("Qphi overflow guard") {
    SpaceTimeField u = SpaceTimeField::zeros(64, 2, 0.01, 0.0, 64);
    std::vector<double> phi_big(2, 10.0);
    CHECK_THROWS_AS(apply_Qphi(u, 100.0, 0.5, phi_big), NumericError);
}
