#pragma once

// Time-frequency operators: Gaussian regularization exp(-|D_t|^2/lambda),
// the band-limiting multiplier M^mu = m(D_t/mu) with a smooth even profile
// (plateau |s| <= 3/4, support |s| <= 1), its regularized variant
// M^mu_lambda = m_lambda(D_t/mu), and the microlocal Carleman weight
// Q^phi_{delta,tau} = exp(-delta |D_t|^2 / (2 tau)) o exp(tau phi).

#include <vector>

#include "jumpwave/errors.hpp"

namespace jumpwave {

struct TimeSignal {
    std::vector<double> samples;
    double dt = 1.0;
    double t0 = 0.0;
    int padding = 0;  // samples appended on each end before the FFT

    std::size_t size() const { return samples.size(); }
};

struct MultiplierProfile {
    double plateau = 0.75;
    double support = 1.0;

    // Smooth even cutoff: 1 on |s|<=plateau, 0 on |s|>=support, exp-blend
    // transition in between.
    double value(double s) const;
    // Gaussian regularization (m_lambda)(s), by direct kernel quadrature.
    double regularized(double s, double lambda) const;
};

// Required one-sided padding (in samples) so the Gaussian wraparound mass
// stays below 1e-10.
int required_padding(double lambda, double dt);

TimeSignal gaussian_regularize(const TimeSignal& f, double lambda);
TimeSignal band_localize(const TimeSignal& f, double mu,
                         const MultiplierProfile& profile = {});
TimeSignal band_localize_regularized(const TimeSignal& f, double mu,
                                     double lambda,
                                     const MultiplierProfile& profile = {});

// Reference oracle: Gaussian kernel convolution by direct quadrature.
TimeSignal gaussian_regularize_quadrature(const TimeSignal& f, double lambda);

// Space-time samples, time-contiguous per spatial node.
struct SpaceTimeField {
    std::size_t nt = 0;
    std::size_t nspace = 0;
    double dt = 1.0;
    double t0 = 0.0;
    int padding = 0;
    std::vector<double> data;  // data[ix*nt + it]

    double& at(std::size_t ix, std::size_t it) { return data[ix * nt + it]; }
    double at(std::size_t ix, std::size_t it) const { return data[ix * nt + it]; }
    static SpaceTimeField zeros(std::size_t nt, std::size_t nspace, double dt,
                                double t0, int padding);
};

// Q^phi_{delta,tau}: pointwise multiply by exp(tau*phi(x)), then Gaussian
// regularization in t with lambda = 2*tau/delta.
SpaceTimeField apply_Qphi(const SpaceTimeField& u, double tau, double delta,
                          const std::vector<double>& phi_at_node);

}  // namespace jumpwave
