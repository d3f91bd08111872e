#include "jumpwave/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>

namespace jumpwave {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// FFTW plan creation is not thread-safe; execution on distinct buffers is.
std::mutex plan_mutex;

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// One plan per size, created with FFTW_ESTIMATE on a scratch buffer and
// executed via fftw_execute_dft on caller buffers.
PlanPair& plans_for(std::size_t n) {
    static std::map<std::size_t, PlanPair> cache;
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    fftw_complex* buf = fftw_alloc_complex(n);
    PlanPair p;
    p.fwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD,
                             FFTW_ESTIMATE);
    p.bwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD,
                             FFTW_ESTIMATE);
    fftw_free(buf);
    return cache.emplace(n, p).first->second;
}

// Apply a real frequency multiplier g(xi) to a real signal via zero-padded FFT.
void apply_multiplier(std::vector<double>& samples, double dt, int padding,
                      const std::function<double(double)>& g) {
    const std::size_t n = samples.size();
    const std::size_t padded = next_pow2(n + 2 * static_cast<std::size_t>(padding));
    PlanPair& plans = plans_for(padded);

    std::vector<std::complex<double>> buf(padded, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        buf[i + padding] = samples[i];

    auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_execute_dft(plans.fwd, raw, raw);
    for (std::size_t k = 0; k < padded; ++k) {
        double freq_index = k <= padded / 2 ? static_cast<double>(k)
                                            : static_cast<double>(k) - padded;
        double xi = 2.0 * kPi * freq_index / (padded * dt);
        buf[k] *= g(xi);
    }
    fftw_execute_dft(plans.bwd, raw, raw);
    for (std::size_t i = 0; i < n; ++i)
        samples[i] = buf[i + padding].real() / static_cast<double>(padded);
}

}  // namespace

double MultiplierProfile::value(double s) const {
    double a = std::abs(s);
    if (a <= plateau) return 1.0;
    if (a >= support) return 0.0;
    auto f = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
    double r = (a - plateau) / (support - plateau);
    return f(1.0 - r) / (f(1.0 - r) + f(r));
}

double MultiplierProfile::regularized(double s, double lambda) const {
    // (m_lambda)(s) = sqrt(lambda/4pi) Int m(s-w) exp(-lambda w^2/4) dw,
    // integrated over the kernel's effective support.
    const double sigma = std::sqrt(2.0 / lambda);
    const double W = 10.0 * sigma;
    const int panels = 512;  // Simpson
    const double hw = 2.0 * W / panels;
    const double norm_c = std::sqrt(lambda / (4.0 * kPi));
    double sum = 0.0;
    for (int i = 0; i <= panels; ++i) {
        double w = -W + i * hw;
        double weight = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        sum += weight * value(s - w) * std::exp(-lambda * w * w / 4.0);
    }
    return norm_c * sum * hw / 3.0;
}

int required_padding(double lambda, double dt) {
    // wraparound mass 0.5*erfc(T sqrt(lambda)/2) <= 1e-10
    // erfc(x) <= 1e-10 for x >= ~4.6; take x = 5.
    double T = 10.0 / std::sqrt(lambda);
    return static_cast<int>(std::ceil(T / dt)) + 1;
}

TimeSignal gaussian_regularize(const TimeSignal& f, double lambda) {
    if (!(lambda > 0.0))
        throw ValidationError("gaussian_regularize: lambda must be positive");
    double pad_time = f.padding * f.dt;
    double wrap = 0.5 * std::erfc(pad_time * std::sqrt(lambda) / 2.0);
    if (wrap > 1e-10)
        throw ValidationError(
            "gaussian_regularize: inadequate padding for the requested lambda "
            "(wraparound mass above 1e-10); increase TimeSignal::padding");
    TimeSignal out = f;
    apply_multiplier(out.samples, out.dt, out.padding,
                     [lambda](double xi) { return std::exp(-xi * xi / lambda); });
    return out;
}

TimeSignal band_localize(const TimeSignal& f, double mu,
                         const MultiplierProfile& profile) {
    if (!(mu > 0.0)) throw ValidationError("band_localize: mu must be positive");
    TimeSignal out = f;
    apply_multiplier(out.samples, out.dt, out.padding,
                     [&](double xi) { return profile.value(xi / mu); });
    return out;
}

TimeSignal band_localize_regularized(const TimeSignal& f, double mu,
                                     double lambda,
                                     const MultiplierProfile& profile) {
    if (!(mu > 0.0) || !(lambda > 0.0))
        throw ValidationError("band_localize_regularized: mu, lambda must be positive");
    TimeSignal out = f;
    apply_multiplier(out.samples, out.dt, out.padding, [&](double xi) {
        return profile.regularized(xi / mu, lambda);
    });
    return out;
}

TimeSignal gaussian_regularize_quadrature(const TimeSignal& f, double lambda) {
    // direct kernel sum over the samples, zero extension outside the window
    TimeSignal out = f;
    const std::size_t n = f.size();
    const double c = std::sqrt(lambda / (4.0 * kPi)) * f.dt;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double d = (static_cast<double>(i) - static_cast<double>(j)) * f.dt;
            acc += f.samples[j] * std::exp(-lambda * d * d / 4.0);
        }
        out.samples[i] = c * acc;
    }
    return out;
}

SpaceTimeField SpaceTimeField::zeros(std::size_t nt, std::size_t nspace,
                                     double dt, double t0, int padding) {
    SpaceTimeField f;
    f.nt = nt;
    f.nspace = nspace;
    f.dt = dt;
    f.t0 = t0;
    f.padding = padding;
    f.data.assign(nt * nspace, 0.0);
    return f;
}

SpaceTimeField apply_Qphi(const SpaceTimeField& u, double tau, double delta,
                          const std::vector<double>& phi_at_node) {
    if (!(tau > 0.0) || !(delta > 0.0))
        throw ValidationError("apply_Qphi: tau, delta must be positive");
    if (phi_at_node.size() != u.nspace)
        throw ValidationError("apply_Qphi: weight not evaluable at every node");
    double max_phi = 0.0;
    for (double p : phi_at_node) max_phi = std::max(max_phi, p);
    if (tau * max_phi > 700.0)
        throw NumericError(
            "apply_Qphi: tau*max(phi) exceeds 700 natural-log units; rescale "
            "the weight or reduce tau to avoid overflow");

    const double lambda = 2.0 * tau / delta;
    SpaceTimeField out = u;
    TimeSignal col;
    col.dt = u.dt;
    col.t0 = u.t0;
    col.padding = u.padding;
    col.samples.resize(u.nt);
    for (std::size_t ix = 0; ix < u.nspace; ++ix) {
        const double w = std::exp(tau * phi_at_node[ix]);
        for (std::size_t it = 0; it < u.nt; ++it)
            col.samples[it] = u.at(ix, it) * w;
        TimeSignal reg = gaussian_regularize(col, lambda);
        for (std::size_t it = 0; it < u.nt; ++it) out.at(ix, it) = reg.samples[it];
    }
    return out;
}

}  // namespace jumpwave
