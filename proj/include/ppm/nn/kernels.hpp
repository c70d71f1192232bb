#pragma once

#include <cstddef>

namespace ppm::nn::kernels {

// Dense matrix products behind the tensor engine. Two backends share the
// same per-element accumulation order, and the OpenMP backend only splits
// work across independent output rows, so results are bit-identical no
// matter which backend runs or how many threads it uses.
enum class Backend { serial, openmp };

void set_backend(Backend b);
Backend active_backend();
bool openmp_compiled();

// The openmp backend stays serial below this many multiply-adds; tiny
// matrices are not worth a fork/join. 0 parallelizes everything.
void set_parallel_threshold(std::size_t flops);
std::size_t parallel_threshold();

// c[m,n] = a[m,k] * b[k,n]            (c overwritten)
void matmul(const double* a, const double* b, double* c, int m, int k, int n);

// c[m,k] += a[m,n] * b[k,n]^T         (c[i][j] += sum_t a[i][t] * b[j][t])
void matmul_abt_acc(const double* a, const double* b, double* c, int m, int n, int k);

// c[k,n] += a[m,k]^T * b[m,n]         (c[i][j] += sum_t a[t][i] * b[t][j])
void matmul_atb_acc(const double* a, const double* b, double* c, int m, int k, int n);

namespace detail {
void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_abt_acc_serial(const double* a, const double* b, double* c, int m, int n, int k);
void matmul_atb_acc_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_openmp(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_abt_acc_openmp(const double* a, const double* b, double* c, int m, int n, int k);
void matmul_atb_acc_openmp(const double* a, const double* b, double* c, int m, int k, int n);
}  // namespace detail

}  // namespace ppm::nn::kernels
