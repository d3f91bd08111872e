// Timing comparison of the serial reference kernels against their OpenMP
// variants on a representative 2D transmission operator. The OpenMP variants
// are bitwise-identical to the serial ones by construction; this benchmark
// reports the speedup actually obtained on this machine.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "jumpwave/elliptic.hpp"
#include "jumpwave/kernels.hpp"

using namespace jumpwave;

namespace {

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial_s, double omp_s) {
    std::printf("%-10s serial %10.6f s   omp %10.6f s   speedup %6.2fx\n",
                name, serial_s, omp_s, serial_s / omp_s);
}

}  // namespace

int main() {
    MediumSpec med;
    med.domain.kind = Domain::Kind::Rectangle2D;
    med.interface = InterfaceSpec::vertical_line(0.5, 0.0, 1.0);
    med.interface.kind = InterfaceSpec::Kind::Polyline2D;
    med.coefficient = PiecewiseCoefficient::constants(1.0, 4.0);
    // odd cell count along x so the interface at 0.5 lands on a face
    DiscreteOperator A = assemble(med, GridSpec{513, 512});
    const std::size_t n = A.n;

    std::vector<double> x(n), y(n), z(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::sin(0.001 * static_cast<double>(i));
        y[i] = std::cos(0.002 * static_cast<double>(i));
        z[i] = x[i] * y[i];
    }

    std::printf("nodes: %zu, threads: %d\n", n, omp_get_max_threads());

    const int inner = 50;
    double s, p;

    s = time_best_of(5, [&] {
        for (int k = 0; k < inner; ++k)
            kernels::spmv_serial(A.row_ptr, A.col, A.val, x.data(), w.data(), n);
    });
    p = time_best_of(5, [&] {
        for (int k = 0; k < inner; ++k)
            kernels::spmv_omp(A.row_ptr, A.col, A.val, x.data(), w.data(), n);
    });
    report("spmv", s, p);

    volatile double sink = 0.0;
    s = time_best_of(5, [&] {
        for (int k = 0; k < inner; ++k)
            sink = kernels::dot_serial(x.data(), y.data(), n);
    });
    p = time_best_of(5, [&] {
        for (int k = 0; k < inner; ++k)
            sink = kernels::dot_omp(x.data(), y.data(), n);
    });
    report("dot", s, p);
    (void)sink;

    s = time_best_of(5, [&] {
        for (int k = 0; k < inner; ++k)
            kernels::axpy_serial(0.5, x.data(), w.data(), n);
    });
    p = time_best_of(5, [&] {
        for (int k = 0; k < inner; ++k)
            kernels::axpy_omp(0.5, x.data(), w.data(), n);
    });
    report("axpy", s, p);

    s = time_best_of(5, [&] {
        for (int k = 0; k < inner; ++k)
            kernels::leapfrog_serial(x.data(), y.data(), z.data(), 1e-6,
                                     w.data(), n);
    });
    p = time_best_of(5, [&] {
        for (int k = 0; k < inner; ++k)
            kernels::leapfrog_omp(x.data(), y.data(), z.data(), 1e-6, w.data(),
                                  n);
    });
    report("leapfrog", s, p);

    return 0;
}
