#pragma once

// Carleman weights, microlocal region classification, factor symbols and the
// quadrature evaluation of the weighted interface inequality.
//
// Conventions: x_n is the signed normal coordinate across the interface
// (negative on the minus side), xi_prime the tangential spatial frequency,
// xi_t the time frequency, tau >= 1 the large parameter, and
// lambda_tau^2 = tau^2 + |xi'|^2 + xi_t^2.

#include <optional>
#include <string>
#include <vector>

#include "jumpwave/elliptic.hpp"
#include "jumpwave/medium.hpp"
#include "jumpwave/spectral.hpp"

namespace jumpwave {

struct CarlemanWeight {
    double alpha_minus = 1.0;
    double alpha_plus = 2.0;
    double beta = 1.0;
    double delta_conv = 0.0;  // convexification strength in psi
    double t0 = 0.0;
    Vec2 x0;                  // center, x0.x is the interface-normal origin

    void validate() const {
        if (!(alpha_minus > 0.0) || !(alpha_plus > alpha_minus) || !(beta > 0.0) ||
            !(delta_conv >= 0.0))
            throw ValidationError(
                "carleman weight: need 0 < alpha_minus < alpha_plus, beta > 0");
    }
};

// phi(x_n) = alpha_side * x_n + beta * x_n^2 / 2
double phi(double x_n, Side side, const CarlemanWeight& w);
double phi_prime(double x_n, Side side, const CarlemanWeight& w);

// psi(t,x) = phi(x_n) - delta_conv * |(t,x) - (t0,x0)|^2, with x_n = x.x - x0.x
double psi(double t, Vec2 x, const CarlemanWeight& w);

// Grid check of the level-set inclusion
//   (B(5R/2)\B(R/2)) cap {-9 delta <= psi <= 2 delta}  inside  {phi > 2 rho} cap B(3R)
// with rho = delta/10; requires delta <= delta_conv R^2 / 40.
bool check_convexification(const CarlemanWeight& w, double R, double delta,
                           int grid_per_axis = 64);

struct MicrolocalPoint {
    Vec2 x;             // x.x minus the weight origin is the normal coordinate x_n
    double xi_prime = 0.0;
    double xi_t = 0.0;
    double tau = 1.0;

    double lambda_sq() const { return xi_prime * xi_prime + xi_t * xi_t; }
    double lambda_tau_sq() const { return tau * tau + lambda_sq(); }
};

struct RegionTags {
    bool E_minus = false, E_plus = false;
    bool GH_minus = false, GH_plus = false;
    double epsilon = 0.0;
};

// Q(x, xi') = b(x) xi'^2
double symbol_Q(const MediumSpec& m, Vec2 x, double xi_prime);

// E_side  iff Q - c_side^{-1} xi_t^2 >= eps * (|xi'|^2 + xi_t^2)
// GH_side iff Q - c_side^{-1} xi_t^2 <= 2 eps * (|xi'|^2 + xi_t^2)
RegionTags classify(const MicrolocalPoint& p, const MediumSpec& m, double eps);

// m_side = sqrt(Q - c_side^{-1} xi_t^2), present only on elliptic sides.
struct EllipticRoots {
    std::optional<double> m_minus;
    std::optional<double> m_plus;
};
EllipticRoots compute_m(const MicrolocalPoint& p, const MediumSpec& m, double eps);

struct FactorSymbols {
    std::optional<double> m_minus, m_plus;
    std::optional<double> e_minus, e_plus;  // tau phi' + m
    std::optional<double> f_minus, f_plus;  // tau phi' - m
};
FactorSymbols factors(const MicrolocalPoint& p, const CarlemanWeight& w,
                      const MediumSpec& m, double eps);

// sup of m_plus/m_minus over interface points x frequency unit circle,
// restricted to E_minus cap E_plus, by dense grid plus local refinement.
double geometric_alpha_ratio(const MediumSpec& m, double eps,
                             int sphere_grid = 10000, int interface_grid = 16);

// Cover of phase space by Gamma_mu = {|xi| < 2 or tau alpha_+ > mu m_+} and
// tilde-Gamma_mu0 = {|xi| > 1 and tau alpha_+ < mu0 m_+}, 1 < mu < mu0, with
// f_+ >= C lam_tau on Gamma_mu (0 <= x_n <= eta) and f_- <= -C lam_tau on
// tilde-Gamma_mu0 (-eta <= x_n <= 0). Since mu < mu0 the union always covers;
// the verified content is the sign margins, which need the geometric
// assumption with margin mu0^2.
struct GammaCoverReport {
    bool cover_holds = false;
    double C = 0.0;       // uniform sign margin (grid minimum over tau >= tau0)
    double tau0 = 0.0;    // smallest grid tau from which everything holds
    bool has_witness = false;
    MicrolocalPoint witness;
    std::string failure;
};

struct GammaCoverGrid {
    int sphere_points = 720;
    int xn_points = 9;
    double eta = 0.1;     // |x_n| <= eta
    std::vector<double> tau_values = {4, 8, 16, 32, 64, 128};
};

GammaCoverReport check_gamma_cover(const CarlemanWeight& w, const MediumSpec& m,
                                   double eps, double mu, double mu0,
                                   const GammaCoverGrid& grid);

// The sub-ellipticity bracket (mu f_+^2 + tau (tau beta - d/dx_n m_+)) / lambda_tau^2
// at one phase-space point (normal derivative of m_+ by central differences).
double subellipticity_bracket(const MicrolocalPoint& p, const CarlemanWeight& w,
                              const MediumSpec& m, double eps, double mu);

// min of the bracket over the grid; positive certifies beta large enough
double check_subellipticity(const CarlemanWeight& w, const MediumSpec& m,
                            double eps, double mu, const GammaCoverGrid& grid);

// ----- inequality quadrature -----

struct TransmissionData {
    // traces on Sigma = R_t x {x_n = 0}, sampled like the field's tangential
    // layout; empty means homogeneous conditions
    std::vector<double> theta;      // [iy*nt + it]
    std::vector<double> Theta;
};

// side-resolved space-time samples on a common (t, x, y) grid; the x axis is
// the interface normal
struct SidePair {
    SpaceTimeField u_minus;  // nspace = nx*ny, node (ix,iy) at ix*... see field
    SpaceTimeField u_plus;
    int nx = 0, ny = 0;
    double hx = 0.0, hy = 0.0;
    Vec2 origin;             // spatial node (0,0)
};

struct CarlemanBreakdown {
    double conjugated_minus = 0.0;   // ||H_- Qphi P^- u_-||^2
    double conjugated_plus = 0.0;
    double remainder = 0.0;          // e^{-d tau} (tau^3 ||e^{tau phi} u||^2 + ...)
    double T_theta = 0.0;            // interface term T_{theta,Theta}
    double lhs = 0.0;
    double rhs_zero_order = 0.0;     // tau^3 ||Qphi u||^2
    double rhs_gradient = 0.0;       // tau sum ||H grad Qphi u||^2
    double rhs = 0.0;
};

struct CarlemanConfig {
    double delta = 0.5;
    double d = 4.0;        // remainder exponent, default 8*delta
    double r0 = 0.25;      // support radius
    double eps = 0.1;
};

CarlemanBreakdown carleman_sides(const SidePair& u, const TransmissionData& td,
                                 const CarlemanWeight& w, double tau,
                                 const CarlemanConfig& cfg, const MediumSpec& m);

struct CertificationRow {
    double tau = 0.0;
    double C = 0.0;        // minimal C with C*LHS >= RHS over the family
    bool degenerate = false;
};

std::vector<CertificationRow> carleman_certify(
    const std::vector<SidePair>& family, const CarlemanWeight& w,
    const CarlemanConfig& cfg, const std::vector<double>& tau_grid,
    const MediumSpec& m);

// Interface residuals of a side pair: theta = u_-|S - u_+|S and
// Theta = (c dnu u)|S- - (c dnu u)|S+, by one-sided second-order traces.
TransmissionData transmission_residuals(const SidePair& u, const MediumSpec& m);

}  // namespace jumpwave
