#include "ppm/nn/kernels.hpp"

#include <atomic>

namespace ppm::nn::kernels {

namespace {
std::atomic<Backend> g_backend{Backend::openmp};
std::atomic<std::size_t> g_threshold{1u << 15};

inline bool use_openmp(std::size_t flops) {
    return g_backend.load(std::memory_order_relaxed) == Backend::openmp &&
           flops >= g_threshold.load(std::memory_order_relaxed);
}
}  // namespace

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }
Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_parallel_threshold(std::size_t flops) { g_threshold.store(flops, std::memory_order_relaxed); }
std::size_t parallel_threshold() { return g_threshold.load(std::memory_order_relaxed); }

void matmul(const double* a, const double* b, double* c, int m, int k, int n) {
    std::size_t flops = std::size_t(m) * std::size_t(k) * std::size_t(n);
    if (use_openmp(flops))
        detail::matmul_openmp(a, b, c, m, k, n);
    else
        detail::matmul_serial(a, b, c, m, k, n);
}

void matmul_abt_acc(const double* a, const double* b, double* c, int m, int n, int k) {
    std::size_t flops = std::size_t(m) * std::size_t(n) * std::size_t(k);
    if (use_openmp(flops))
        detail::matmul_abt_acc_openmp(a, b, c, m, n, k);
    else
        detail::matmul_abt_acc_serial(a, b, c, m, n, k);
}

void matmul_atb_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    std::size_t flops = std::size_t(m) * std::size_t(k) * std::size_t(n);
    if (use_openmp(flops))
        detail::matmul_atb_acc_openmp(a, b, c, m, k, n);
    else
        detail::matmul_atb_acc_serial(a, b, c, m, k, n);
}

}  // namespace ppm::nn::kernels
