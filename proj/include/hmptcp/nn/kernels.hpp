#pragma once

#include <cstddef>
#include <string_view>

namespace hmptcp::nn {

/// Dense inner loops. All matrices are row-major and every kernel accumulates
/// into its output (C += ...). Each entry exists as a portable scalar
/// reference and, on x86-64, an AVX2/FMA variant chosen at runtime.
struct KernelTable {
    const char* name;
    /// C[m x n] += A[m x k] * B[n x k]^T
    void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    /// C[m x n] += A[m x k] * B[k x n]
    void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    /// C[m x n] += A[k x m]^T * B[k x n]
    void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
    /// y += alpha * x
    void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
    /// Adam moment update and step; c1, c2 are the bias corrections 1 - beta^t.
    void (*adam)(std::size_t n, double* p, double* m, double* v, const double* g, double lr, double beta1,
                 double beta2, double eps, double c1, double c2);
    /// t = tau * s + (1 - tau) * t
    void (*blend)(std::size_t n, double tau, const double* s, double* t);
};

const KernelTable& scalar_kernels();
/// nullptr when the build or the CPU lacks AVX2 and FMA.
const KernelTable* avx2_kernels();

/// Kernels used by the layers. Defaults to the best available variant; the
/// HMPTCP_SIMD environment variable (scalar|avx2|auto) overrides it.
const KernelTable& kernels();
/// Throws std::invalid_argument for an unknown or unavailable variant.
void select_kernels(std::string_view name);

}  // namespace hmptcp::nn
