#pragma once

// Leapfrog time stepping for the transmission wave system
//   u_tt = -A u + f,  u = 0 on the boundary,
// with the exactly conserved discrete energy
//   E_{n+1/2} = 1/2 ||(u^{n+1}-u^n)/dt||^2_{L2} + 1/2 <A u^n, u^{n+1}>.

#include <functional>
#include <vector>

#include "jumpwave/elliptic.hpp"

namespace jumpwave {

struct WaveState {
    std::vector<double> u;
    std::vector<double> v;
    double time = 0.0;
};

struct SimConfig {
    double dt = 0.0;          // 0: choose from CFL
    double T = 1.0;
    double cfl_fraction = 0.9;
    std::function<double(double, Vec2)> source;  // optional
    int snapshot_stride = 1;  // store every k-th level
};

struct Trajectory {
    double dt = 0.0;
    int snapshot_stride = 1;
    std::vector<double> times;                 // snapshot times
    std::vector<std::vector<double>> states;   // u at snapshot times
    std::vector<double> energy;                // E_{n+1/2}, one per step
    WaveState final_state;
};

// u_next = 2 u_cur - u_prev + dt^2 (-A u_cur + f)
std::vector<double> step(const std::vector<double>& u_prev,
                         const std::vector<double>& u_cur,
                         const DiscreteOperator& A, double dt,
                         const std::vector<double>* source = nullptr);

double cfl_limit(const DiscreteOperator& A);

Trajectory simulate(const DiscreteOperator& A, const WaveState& init,
                    const SimConfig& config);

const std::vector<double>& energy(const Trajectory& traj);

// Observation regions: an interior mask over operator nodes, or a piece of
// the Dirichlet boundary (normal trace by one-sided second-order quotients).
struct BoundarySet {
    enum class Edge { Left, Right, Bottom, Top };
    Edge edge = Edge::Left;
    double lo = 0.0, hi = 1.0;  // tangential coordinate range (ignored in 1D)
};

struct ObservationRegion {
    std::vector<std::uint8_t> mask;   // nonempty: interior L2 observation
    std::vector<BoundarySet> boundary;  // nonempty: normal-trace observation
};

ObservationRegion interval_mask(const DiscreteOperator& A, double a, double b);
ObservationRegion box_mask(const DiscreteOperator& A, Vec2 lo, Vec2 hi);

double record_observation(const Trajectory& traj, const DiscreteOperator& A,
                          const ObservationRegion& region);

struct TransmissionReport {
    double displacement_jump = 0.0;   // single-valued grid function: 0
    double harmonic_flux_jump = 0.0;  // single face flux: 0 by construction
    double one_sided_flux_jump = 0.0; // second-order reconstructed traces
};

TransmissionReport check_transmission(const Trajectory& traj,
                                      const DiscreteOperator& A,
                                      const MediumSpec& medium);

}  // namespace jumpwave
