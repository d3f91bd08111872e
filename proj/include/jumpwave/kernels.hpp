#pragma once

// Data-parallel inner kernels. Every kernel has a serial reference and an
// OpenMP variant that must produce bitwise-identical results regardless of
// thread count: element-wise loops write disjoint outputs, and reductions
// are blocked with a fixed block size and combined in block order.

#include <cstddef>
#include <cstdint>
#include <vector>

namespace jumpwave::kernels {

inline constexpr std::size_t kReduceBlock = 1024;

// y = A x for CSR (row_ptr, col, val).
inline void spmv_serial(const std::vector<std::int64_t>& row_ptr,
                        const std::vector<std::int32_t>& col,
                        const std::vector<double>& val,
                        const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            s += val[k] * x[col[k]];
        y[i] = s;
    }
}

inline void spmv_omp(const std::vector<std::int64_t>& row_ptr,
                     const std::vector<std::int32_t>& col,
                     const std::vector<double>& val,
                     const double* x, double* y, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        double s = 0.0;
        for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            s += val[k] * x[col[k]];
        y[i] = s;
    }
}

inline double dot_serial(const double* a, const double* b, std::size_t n) {
    const std::size_t nblk = (n + kReduceBlock - 1) / kReduceBlock;
    double total = 0.0;
    for (std::size_t blk = 0; blk < nblk; ++blk) {
        const std::size_t lo = blk * kReduceBlock;
        const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        total += s;
    }
    return total;
}

inline double dot_omp(const double* a, const double* b, std::size_t n) {
    const std::size_t nblk = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> partial(nblk);
#pragma omp parallel for schedule(static)
    for (std::int64_t blk = 0; blk < static_cast<std::int64_t>(nblk); ++blk) {
        const std::size_t lo = static_cast<std::size_t>(blk) * kReduceBlock;
        const std::size_t hi = lo + kReduceBlock < n ? lo + kReduceBlock : n;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        partial[blk] = s;
    }
    double total = 0.0;
    for (std::size_t blk = 0; blk < nblk; ++blk) total += partial[blk];
    return total;
}

// y = alpha*x + y
inline void axpy_serial(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline void axpy_omp(double alpha, const double* x, double* y, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        y[i] += alpha * x[i];
}

// Leapfrog update: next = 2*cur - prev + dt2*(rhs), all length n.
inline void leapfrog_serial(const double* cur, const double* prev,
                            const double* rhs, double dt2, double* next,
                            std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        next[i] = 2.0 * cur[i] - prev[i] + dt2 * rhs[i];
}

inline void leapfrog_omp(const double* cur, const double* prev,
                         const double* rhs, double dt2, double* next,
                         std::size_t n) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        next[i] = 2.0 * cur[i] - prev[i] + dt2 * rhs[i];
}

// Dispatchers used by the library; flipped to serial in tests to compare.
extern bool use_parallel;  // defined in runner.cpp, default true

inline void spmv(const std::vector<std::int64_t>& rp,
                 const std::vector<std::int32_t>& c,
                 const std::vector<double>& v, const double* x, double* y,
                 std::size_t n) {
    if (use_parallel) spmv_omp(rp, c, v, x, y, n);
    else spmv_serial(rp, c, v, x, y, n);
}

inline double dot(const double* a, const double* b, std::size_t n) {
    return use_parallel ? dot_omp(a, b, n) : dot_serial(a, b, n);
}

inline void leapfrog(const double* cur, const double* prev, const double* rhs,
                     double dt2, double* next, std::size_t n) {
    if (use_parallel) leapfrog_omp(cur, prev, rhs, dt2, next, n);
    else leapfrog_serial(cur, prev, rhs, dt2, next, n);
}

}  // namespace jumpwave::kernels
