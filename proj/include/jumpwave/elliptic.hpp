#pragma once

// Discrete A = -div(c grad) with Dirichlet boundary and flux-conservative
// face coefficients (harmonic mean of side-resolved c). The interface must
// lie on cell faces, which makes the discrete flux across it single-valued
// and both transmission conditions exact for piecewise-linear steady states.
// H^s norms for s in {-1,0,1} are defined through the spectral calculus of A.

#include <cstdint>
#include <vector>

#include "jumpwave/medium.hpp"

namespace jumpwave {

struct GridSpec {
    int nx_cells = 64;
    int ny_cells = 0;  // 0 selects 1D
};

struct DiscreteOperator {
    bool two_d = false;
    int nx = 0, ny = 0;          // interior nodes per axis (ny=1 in 1D)
    double hx = 0.0, hy = 0.0;
    Vec2 origin;                 // position of interior node (0,0)
    double cell_volume = 0.0;
    std::size_t n = 0;           // nx*ny

    std::vector<std::int64_t> row_ptr;
    std::vector<std::int32_t> col;
    std::vector<double> val;

    Vec2 node(int ix, int iy = 0) const {
        return {origin.x + ix * hx, origin.y + iy * hy};
    }
    void apply(const double* x, double* y) const;
    std::vector<double> apply(const std::vector<double>& x) const;
    double inner(const std::vector<double>& a, const std::vector<double>& b) const;
    double norm_L2(const std::vector<double>& a) const;
};

DiscreteOperator assemble(const MediumSpec& medium, const GridSpec& grid);

struct Spectrum {
    std::vector<double> lambda;        // ascending
    std::vector<double> vectors;       // column-major n x k, L2-orthonormal
    std::size_t n = 0;
    std::size_t k = 0;
    double cell_volume = 0.0;

    const double* vec(std::size_t j) const { return vectors.data() + j * n; }
    // <u, e_j> in the discrete L2 inner product
    double coeff(const std::vector<double>& u, std::size_t j) const;
};

Spectrum eigendecompose(const DiscreteOperator& A, std::size_t k);

struct NormResult {
    double value = 0.0;
    bool tail_warning = false;  // spectral tail mass above 1e-6 of ||u||^2
};

NormResult norm_Hs_checked(const std::vector<double>& u, int s, const Spectrum& sp);
double norm_Hs(const std::vector<double>& u, int s, const Spectrum& sp);

// Lambda = ||(u0,u1)||_{H1 x L2} / ||(u0,u1)||_{L2 x H^-1}
double typical_frequency(const std::vector<double>& u0,
                         const std::vector<double>& u1, const Spectrum& sp);

std::vector<double> apply_inverse(const DiscreteOperator& A,
                                  const std::vector<double>& u,
                                  double tolerance);

// Power-method estimate of the largest eigenvalue (50 iterations by default).
double estimate_lambda_max(const DiscreteOperator& A, int iterations = 50);

}  // namespace jumpwave
