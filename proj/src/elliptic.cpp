#include "jumpwave/elliptic.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "jumpwave/kernels.hpp"

namespace jumpwave {

void DiscreteOperator::apply(const double* x, double* y) const {
    kernels::spmv(row_ptr, col, val, x, y, n);
}

std::vector<double> DiscreteOperator::apply(const std::vector<double>& x) const {
    std::vector<double> y(n);
    apply(x.data(), y.data());
    return y;
}

double DiscreteOperator::inner(const std::vector<double>& a,
                               const std::vector<double>& b) const {
    return cell_volume * kernels::dot(a.data(), b.data(), n);
}

double DiscreteOperator::norm_L2(const std::vector<double>& a) const {
    return std::sqrt(inner(a, a));
}

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

void check_face_aligned(double coord, double lo, double h, const char* axis) {
    double f = (coord - lo) / h - 0.5;
    if (std::abs(f - std::round(f)) > 1e-9) {
        std::ostringstream os;
        os << "assemble: interface at " << coord << " not on a cell face along "
           << axis << "; nearest faces are " << lo + (std::floor(f) + 0.5) * h
           << " and " << lo + (std::ceil(f) + 0.5) * h
           << " (choose the interface or the cell count so they coincide)";
        throw ValidationError(os.str());
    }
}

}  // namespace

DiscreteOperator assemble(const MediumSpec& medium, const GridSpec& grid) {
    medium.validate();
    DiscreteOperator A;
    const Domain& d = medium.domain;
    A.two_d = grid.ny_cells > 0;
    if (A.two_d != (d.kind == Domain::Kind::Rectangle2D))
        throw ValidationError("assemble: grid dimensionality does not match domain");
    const int Mx = grid.nx_cells;
    const int My = A.two_d ? grid.ny_cells : 1;
    if (Mx < 2 || (A.two_d && My < 2))
        throw ValidationError("assemble: need at least 2 cells per axis");
    A.hx = (d.x1 - d.x0) / Mx;
    A.hy = A.two_d ? (d.y1 - d.y0) / My : 0.0;
    A.nx = Mx - 1;
    A.ny = A.two_d ? My - 1 : 1;
    A.origin = {d.x0 + A.hx, A.two_d ? d.y0 + A.hy : 0.0};
    A.cell_volume = A.two_d ? A.hx * A.hy : A.hx;
    A.n = static_cast<std::size_t>(A.nx) * A.ny;

    if (medium.interface.kind == InterfaceSpec::Kind::Point1D) {
        check_face_aligned(medium.interface.point, d.x0, A.hx, "x");
    } else {
        // Only straight vertical interfaces are representable on faces.
        double xs = medium.interface.polyline.front().x;
        for (const Vec2& p : medium.interface.polyline)
            if (std::abs(p.x - xs) > 1e-12)
                throw ValidationError(
                    "assemble: only vertical straight interfaces align with cell "
                    "faces; refine the polyline or rotate the domain");
        check_face_aligned(xs, d.x0, A.hx, "x");
    }

    auto side_resolved_c = [&](Vec2 p) {
        int s = medium.interface.side_of(p);
        return eval_c(medium, p, s < 0 ? Side::Minus : Side::Plus);
    };
    // vertex position including boundary vertices
    auto vertex = [&](int vx, int vy) -> Vec2 {
        return {d.x0 + vx * A.hx, A.two_d ? d.y0 + vy * A.hy : 0.0};
    };

    A.row_ptr.assign(A.n + 1, 0);
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
    cols.reserve(A.n * 5);
    vals.reserve(A.n * 5);

    const double ix2 = 1.0 / (A.hx * A.hx);
    const double iy2 = A.two_d ? 1.0 / (A.hy * A.hy) : 0.0;

    for (int iy = 0; iy < A.ny; ++iy) {
        for (int ix = 0; ix < A.nx; ++ix) {
            const int vx = ix + 1, vy = A.two_d ? iy + 1 : 0;  // vertex indices
            const std::size_t row = static_cast<std::size_t>(iy) * A.nx + ix;
            double diag = 0.0;
            auto face = [&](int ox, int oy, double inv_h2) {
                double cf = harmonic(side_resolved_c(vertex(vx, vy)),
                                     side_resolved_c(vertex(vx + ox, vy + oy)));
                diag += cf * inv_h2;
                int jx = ix + ox, jy = iy + oy;
                bool interior = jx >= 0 && jx < A.nx && jy >= 0 && jy < A.ny;
                if (interior) {
                    cols.push_back(static_cast<std::int32_t>(jy * A.nx + jx));
                    vals.push_back(-cf * inv_h2);
                }
            };
            cols.push_back(static_cast<std::int32_t>(row));
            vals.push_back(0.0);
            std::size_t diag_pos = vals.size() - 1;
            face(-1, 0, ix2);
            face(+1, 0, ix2);
            if (A.two_d) {
                face(0, -1, iy2);
                face(0, +1, iy2);
            }
            vals[diag_pos] = diag;
            A.row_ptr[row + 1] = static_cast<std::int64_t>(cols.size());
        }
    }
    A.col = std::move(cols);
    A.val = std::move(vals);
    return A;
}

double Spectrum::coeff(const std::vector<double>& u, std::size_t j) const {
    return cell_volume * kernels::dot(u.data(), vec(j), n);
}

namespace {

Spectrum eig_1d_tridiag(const DiscreteOperator& A, std::size_t k) {
    const lapack_int n = static_cast<lapack_int>(A.n);
    std::vector<double> diag(A.n), off(A.n > 0 ? A.n - 1 : 0, 0.0);
    for (std::size_t i = 0; i < A.n; ++i) {
        for (std::int64_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
            if (A.col[p] == static_cast<std::int32_t>(i)) diag[i] = A.val[p];
            else if (A.col[p] == static_cast<std::int32_t>(i) + 1)
                off[i] = A.val[p];
        }
    }
    std::vector<double> z(A.n * A.n);
    lapack_int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', n, diag.data(),
                                    off.data(), z.data(), n);
    if (info != 0) throw NumericError("eigendecompose: dstev failed");
    Spectrum sp;
    sp.n = A.n;
    sp.k = k;
    sp.cell_volume = A.cell_volume;
    sp.lambda.assign(diag.begin(), diag.begin() + k);
    sp.vectors.resize(A.n * k);
    const double scale = 1.0 / std::sqrt(A.cell_volume);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < A.n; ++i)
            sp.vectors[j * A.n + i] = z[j * A.n + i] * scale;
    return sp;
}

// Subspace iteration on A^{-1} with Rayleigh-Ritz, for the 2D case.
Spectrum eig_subspace(const DiscreteOperator& A, std::size_t k) {
    const std::size_t m = std::min(A.n, k + std::max<std::size_t>(8, k / 2));
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> X(m, std::vector<double>(A.n));
    for (auto& x : X)
        for (double& v : x) v = gauss(rng);

    auto orthonormalize = [&](std::vector<std::vector<double>>& B) {
        for (std::size_t j = 0; j < B.size(); ++j) {
            for (int rep = 0; rep < 2; ++rep)
                for (std::size_t i = 0; i < j; ++i) {
                    double c = A.inner(B[i], B[j]);
                    for (std::size_t p = 0; p < A.n; ++p) B[j][p] -= c * B[i][p];
                }
            double nrm = A.norm_L2(B[j]);
            if (nrm < 1e-14) throw NumericError("eigendecompose: subspace collapsed");
            for (double& v : B[j]) v /= nrm;
        }
    };

    Spectrum sp;
    sp.n = A.n;
    sp.cell_volume = A.cell_volume;
    const int budget = 300;
    for (int it = 0; it < budget; ++it) {
        // inverse power step
        for (auto& x : X) x = apply_inverse(A, x, 1e-12);
        orthonormalize(X);
        // Rayleigh-Ritz on the subspace
        std::vector<std::vector<double>> AX(m);
        for (std::size_t j = 0; j < m; ++j) AX[j] = A.apply(X[j]);
        std::vector<double> T(m * m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                T[j * m + i] = A.inner(X[i], AX[j]);
        std::vector<double> w(m);
        lapack_int info = LAPACKE_dsyev(LAPACK_COL_MAJOR, 'V', 'U',
                                        static_cast<lapack_int>(m), T.data(),
                                        static_cast<lapack_int>(m), w.data());
        if (info != 0) throw NumericError("eigendecompose: dsyev failed");
        std::vector<std::vector<double>> Y(m, std::vector<double>(A.n, 0.0));
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t i = 0; i < m; ++i) {
                double c = T[j * m + i];
                for (std::size_t p = 0; p < A.n; ++p) Y[j][p] += c * X[i][p];
            }
        X = std::move(Y);
        // residual check on the k requested pairs
        bool done = true;
        for (std::size_t j = 0; j < k; ++j) {
            std::vector<double> r = A.apply(X[j]);
            for (std::size_t p = 0; p < A.n; ++p) r[p] -= w[j] * X[j][p];
            double res = A.norm_L2(r);
            if (res > 1e-8 * std::max(w[j], 1e-30)) {
                done = false;
                break;
            }
        }
        if (done) {
            sp.k = k;
            sp.lambda.assign(w.begin(), w.begin() + k);
            sp.vectors.resize(A.n * k);
            for (std::size_t j = 0; j < k; ++j)
                std::copy(X[j].begin(), X[j].end(), sp.vectors.begin() + j * A.n);
            return sp;
        }
    }
    throw NumericError("eigendecompose: subspace iteration did not reach the "
                       "1e-8 residual target within the iteration budget");
}

}  // namespace

Spectrum eigendecompose(const DiscreteOperator& A, std::size_t k) {
    if (k < 1 || k > A.n)
        throw ValidationError("eigendecompose: k out of range");
    return A.two_d ? eig_subspace(A, k) : eig_1d_tridiag(A, k);
}

NormResult norm_Hs_checked(const std::vector<double>& u, int s, const Spectrum& sp) {
    if (s < -1 || s > 1)
        throw ValidationError("norm_Hs: s must be in {-1,0,1}");
    if (u.size() != sp.n) throw ValidationError("norm_Hs: size mismatch");
    double sum = 0.0, mass = 0.0;
    for (std::size_t j = 0; j < sp.k; ++j) {
        double a = sp.coeff(u, j);
        mass += a * a;
        sum += std::pow(sp.lambda[j], s) * a * a;
    }
    double l2sq = sp.cell_volume * kernels::dot(u.data(), u.data(), u.size());
    NormResult r;
    r.value = std::sqrt(sum);
    r.tail_warning = l2sq > 0.0 && (l2sq - mass) > 1e-6 * l2sq;
    return r;
}

double norm_Hs(const std::vector<double>& u, int s, const Spectrum& sp) {
    return norm_Hs_checked(u, s, sp).value;
}

double typical_frequency(const std::vector<double>& u0,
                         const std::vector<double>& u1, const Spectrum& sp) {
    double hi = std::hypot(norm_Hs(u0, 1, sp), norm_Hs(u1, 0, sp));
    double lo = std::hypot(norm_Hs(u0, 0, sp), norm_Hs(u1, -1, sp));
    if (lo == 0.0) throw ValidationError("typical_frequency: zero data");
    return hi / lo;
}

std::vector<double> apply_inverse(const DiscreteOperator& A,
                                  const std::vector<double>& u,
                                  double tolerance) {
    if (!(tolerance > 0.0))
        throw ValidationError("apply_inverse: tolerance must be positive");
    std::vector<double> diag(A.n);
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::int64_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p)
            if (A.col[p] == static_cast<std::int32_t>(i)) diag[i] = A.val[p];

    std::vector<double> x(A.n, 0.0), r = u, z(A.n), p(A.n), Ap(A.n);
    double bnorm = std::sqrt(kernels::dot(r.data(), r.data(), A.n));
    if (bnorm == 0.0) return x;
    for (std::size_t i = 0; i < A.n; ++i) z[i] = r[i] / diag[i];
    p = z;
    double rz = kernels::dot(r.data(), z.data(), A.n);
    const std::size_t budget = 20 * A.n + 100;
    for (std::size_t it = 0; it < budget; ++it) {
        A.apply(p.data(), Ap.data());
        double alpha = rz / kernels::dot(p.data(), Ap.data(), A.n);
        for (std::size_t i = 0; i < A.n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        double rnorm = std::sqrt(kernels::dot(r.data(), r.data(), A.n));
        if (rnorm <= tolerance * bnorm) return x;
        for (std::size_t i = 0; i < A.n; ++i) z[i] = r[i] / diag[i];
        double rz_new = kernels::dot(r.data(), z.data(), A.n);
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < A.n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw NumericError("apply_inverse: CG iteration budget exceeded");
}

double estimate_lambda_max(const DiscreteOperator& A, int iterations) {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> v(A.n), w(A.n);
    for (double& x : v) x = unif(rng);
    double lam = 0.0;
    for (int it = 0; it < iterations; ++it) {
        A.apply(v.data(), w.data());
        double nrm = std::sqrt(kernels::dot(w.data(), w.data(), A.n));
        if (nrm == 0.0) break;
        lam = kernels::dot(v.data(), w.data(), A.n) /
              kernels::dot(v.data(), v.data(), A.n);
        for (std::size_t i = 0; i < A.n; ++i) v[i] = w[i] / nrm;
    }
    return lam;
}

}  // namespace jumpwave
