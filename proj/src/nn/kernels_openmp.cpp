#include "ppm/nn/kernels.hpp"

// OpenMP backend. Work splits across output rows only; every output element
// is still accumulated by a single thread in the serial order, which keeps
// results bit-identical to the serial backend for any thread count.

namespace ppm::nn::kernels {

bool openmp_compiled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

namespace detail {

void matmul_openmp(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* ci = c + std::size_t(i) * n;
        for (int j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = a + std::size_t(i) * k;
        for (int t = 0; t < k; ++t) {
            double av = ai[t];
            const double* bt = b + std::size_t(t) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

void matmul_abt_acc_openmp(const double* a, const double* b, double* c, int m, int n, int k) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        const double* ai = a + std::size_t(i) * n;
        double* ci = c + std::size_t(i) * k;
        for (int j = 0; j < k; ++j) {
            const double* bj = b + std::size_t(j) * n;
            double acc = 0.0;
            for (int t = 0; t < n; ++t) acc += ai[t] * bj[t];
            ci[j] += acc;
        }
    }
}

void matmul_atb_acc_openmp(const double* a, const double* b, double* c, int m, int k, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < k; ++i) {
        double* ci = c + std::size_t(i) * n;
        for (int t = 0; t < m; ++t) {
            double av = a[std::size_t(t) * k + i];
            const double* bt = b + std::size_t(t) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

}  // namespace detail
}  // namespace ppm::nn::kernels
