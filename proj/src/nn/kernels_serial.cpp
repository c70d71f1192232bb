#include "ppm/nn/kernels.hpp"

// Reference implementations. The OpenMP backend must keep the exact loop
// structure of these (parallelism over the outer row index only) so both
// backends produce bit-identical results.

namespace ppm::nn::kernels::detail {

void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n) {
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

void matmul_abt_acc_serial(const double* a, const double* b, double* c, int m, int n, int k) {
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

void matmul_atb_acc_serial(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < k; ++i) {
        double* ci = c + std::size_t(i) * n;
        for (int t = 0; t < m; ++t) {
            double av = a[std::size_t(t) * k + i];
            const double* bt = b + std::size_t(t) * n;
            for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

}  // namespace ppm::nn::kernels::detail
