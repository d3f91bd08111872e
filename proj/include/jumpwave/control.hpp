#pragma once

// Observability, quantitative unique continuation, log-stability fits,
// penalized HUM control synthesis, control-cost curves, and the total
// internal reflection (trapping) demonstration.

#include <cstdint>
#include <vector>

#include "jumpwave/wavesolver.hpp"

namespace jumpwave {

struct HumOptions {
    double penalty = 1e-2;      // initial terminal penalty (shrunk by bisection)
    double cg_tol = 1e-8;
    int cg_max_iters = 200;
    int bisection_steps = 8;
};

struct ControlProblem {
    ObservationRegion omega;    // observation / control region
    double T = 1.0;
    double eps_ctl = 0.1;       // target relative terminal smallness, in (0,1)
    HumOptions hum;
    double dt = 0.0;            // 0: choose from CFL
    double cfl_fraction = 0.9;

    void validate() const;
};

// ||u||_{L^2((0,T) x omega)} (or the boundary normal trace) of the free
// evolution from init.
double observe(const WaveState& init, const ControlProblem& problem,
               const DiscreteOperator& A);

struct ObservabilityReport {
    std::vector<double> mu;
    std::vector<double> C;      // minimal feasible C at each mu, fixed kappa
    double kappa = 0.0;
    double T = 0.0;
    std::size_t ensemble_size = 0;
    bool time_below_threshold = false;  // T <= 2 L(M, omega) + grid margin
    bool all_feasible = true;
};

// Minimal C per mu such that, for every ensemble member,
//   ||(u0,u1)||_{L2 x H^-1} <= C e^{kappa mu} ||u||_{L2((0,T) x omega)}
//                              + (C/mu) ||(u0,u1)||_{H1 x L2}.
// L_omega is the adapted-metric radius sup_x dist(x, omega); pass <= 0 to
// skip the time-threshold warning.
ObservabilityReport quant_uc_check(const std::vector<WaveState>& ensemble,
                                   const ControlProblem& problem,
                                   const std::vector<double>& mu_grid,
                                   double kappa, const DiscreteOperator& A,
                                   const Spectrum& sp, double L_omega);

struct StabilityReport {
    // minimal C with N_H <= C e^{C Lambda} O over the ensemble
    double C_exponential = 0.0;
    // minimal C with N_L <= C N_H / log(1 + N_H / O)
    double C_log = 0.0;
    std::size_t binding_member = 0;          // argmax of the log form
    std::size_t skipped_zero_observation = 0;
};

StabilityReport stability_check(const std::vector<WaveState>& ensemble,
                                const ControlProblem& problem,
                                const DiscreteOperator& A, const Spectrum& sp);

// Source samples at time levels 0..levels-1 on the operator grid.
struct LevelField {
    std::vector<double> data;   // [level * n + node]
    std::size_t levels = 0;
    std::size_t n = 0;
    double dt = 0.0;

    double& at(std::size_t level, std::size_t node) {
        return data[level * n + node];
    }
    double at(std::size_t level, std::size_t node) const {
        return data[level * n + node];
    }
};

LevelField zero_levels(const DiscreteOperator& A, std::size_t levels, double dt);

// Terminal state (y, v) of u_tt = -A u + g from zero initial data, by the
// leapfrog recursion; v is the exact-reversal terminal velocity.
void forward_terminal(const LevelField& g, const DiscreteOperator& A,
                      std::vector<double>& y, std::vector<double>& v);

// Exact transpose of forward_terminal in the Euclidean pairing: the returned
// levels satisfy <forward(g), (p,q)> = <g, adjoint(p,q)> for all g.
LevelField adjoint_terminal(const std::vector<double>& p,
                            const std::vector<double>& q,
                            const DiscreteOperator& A, std::size_t levels,
                            double dt);

struct HumResult {
    LevelField control;          // zero off the mask
    double cost = 0.0;           // ||f||_{L2((0,T) x omega)}
    double achieved_ratio = 0.0; // terminal L2 x H^-1 norm / initial
    double penalty_used = 0.0;
    int cg_iterations = 0;
    bool achieved = false;       // achieved_ratio <= eps_ctl
    std::vector<double> J_history;  // objective after each CG iteration
};

// Penalized HUM: minimize J(f) = 1/2 ||f||^2 + 1/(2 penalty) ||(u_f(T),
// d_t u_f(T))||^2_{L2 x H^-1} by conjugate gradient (one adjoint solve per
// iteration); the penalty is shrunk until the terminal ratio meets eps_ctl
// or the bisection budget is exhausted (achieved flag reports which).
HumResult hum_control(const WaveState& init, const ControlProblem& problem,
                      const DiscreteOperator& A);

struct CostCurve {
    std::vector<double> eps;
    std::vector<double> cost;
    std::vector<double> achieved;
    std::vector<std::uint8_t> ok;   // row met its eps
    double fit_slope = 0.0;         // log cost vs 1/eps
    double fit_intercept = 0.0;
    double fit_residual = 0.0;      // rms about the fit
};

CostCurve cost_curve(const WaveState& init, const ControlProblem& problem,
                     const std::vector<double>& eps_list,
                     const DiscreteOperator& A);

struct TrappingReport {
    double reflected_fraction = 0.0;    // energy left in Omega_- at the end
    double transmitted_fraction = 0.0;  // energy in Omega_+ at the end
    double residual_fraction = 0.0;     // near-interface strip remainder
    double analytic_reflected = 0.0;    // plane-wave matching coefficients
    double analytic_transmitted = 0.0;
    double critical_angle = 0.0;
    bool evanescent = false;            // incidence beyond the critical angle
};

// Plane-wave packet launched in Omega_- against a straight vertical
// interface; measured energy fractions vs the two-condition matching oracle.
TrappingReport trapping_demo(const MediumSpec& medium, double angle,
                             double frequency, const GridSpec& grid);

}  // namespace jumpwave
