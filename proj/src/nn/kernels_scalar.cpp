#include <cmath>

#include "hmptcp/nn/kernels.hpp"

namespace hmptcp::nn {

namespace {

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ar = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* br = b + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
            c[i * n + j] += s;
        }
    }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t i = 0; i < m; ++i) {
        double* cr = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const double* br = b + p * n;
            for (std::size_t j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* ar = a + p * m;
        const double* br = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = ar[i];
            double* cr = c + i * n;
            for (std::size_t j = 0; j < n; ++j) cr[j] += av * br[j];
        }
    }
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void adam(std::size_t n, double* p, double* m, double* v, const double* g, double lr, double beta1, double beta2,
          double eps, double c1, double c2) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
}

void blend(std::size_t n, double tau, const double* s, double* t) {
    for (std::size_t i = 0; i < n; ++i) t[i] = tau * s[i] + (1.0 - tau) * t[i];
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", gemm_nt, gemm_nn, gemm_tn, axpy, adam, blend};
    return table;
}

}  // namespace hmptcp::nn
