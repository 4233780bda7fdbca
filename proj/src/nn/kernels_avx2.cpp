#include <immintrin.h>

#include <cmath>

#include "hmptcp/nn/kernels.hpp"

namespace hmptcp::nn::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double dot(const double* x, const double* y, std::size_t k) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t p = 0;
    for (; p + 8 <= k; p += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p), _mm256_loadu_pd(y + p), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p + 4), _mm256_loadu_pd(y + p + 4), acc1);
    }
    for (; p + 4 <= k; p += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p), _mm256_loadu_pd(y + p), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; p < k; ++p) s += x[p] * y[p];
    return s;
}

// Row update cr[0..n) += av * br[0..n).
inline void row_axpy(std::size_t n, double av, const double* br, double* cr) {
    const __m256d a = _mm256_set1_pd(av);
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        _mm256_storeu_pd(cr + j, _mm256_fmadd_pd(a, _mm256_loadu_pd(br + j), _mm256_loadu_pd(cr + j)));
        _mm256_storeu_pd(cr + j + 4, _mm256_fmadd_pd(a, _mm256_loadu_pd(br + j + 4), _mm256_loadu_pd(cr + j + 4)));
    }
    for (; j + 4 <= n; j += 4) {
        _mm256_storeu_pd(cr + j, _mm256_fmadd_pd(a, _mm256_loadu_pd(br + j), _mm256_loadu_pd(cr + j)));
    }
    for (; j < n; ++j) cr[j] += av * br[j];
}

// Four rows of A against two rows of B per pass: each B load feeds four FMAs.
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    const std::size_t kv = k & ~std::size_t{3};
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        const double* a0 = a + i * k;
        const double* a1 = a0 + k;
        const double* a2 = a1 + k;
        const double* a3 = a2 + k;
        std::size_t j = 0;
        for (; j + 2 <= n; j += 2) {
            const double* b0 = b + j * k;
            const double* b1 = b0 + k;
            __m256d s00 = _mm256_setzero_pd(), s01 = _mm256_setzero_pd(), s10 = _mm256_setzero_pd(),
                    s11 = _mm256_setzero_pd(), s20 = _mm256_setzero_pd(), s21 = _mm256_setzero_pd(),
                    s30 = _mm256_setzero_pd(), s31 = _mm256_setzero_pd();
            for (std::size_t p = 0; p < kv; p += 4) {
                const __m256d v0 = _mm256_loadu_pd(b0 + p), v1 = _mm256_loadu_pd(b1 + p);
                __m256d x = _mm256_loadu_pd(a0 + p);
                s00 = _mm256_fmadd_pd(x, v0, s00);
                s01 = _mm256_fmadd_pd(x, v1, s01);
                x = _mm256_loadu_pd(a1 + p);
                s10 = _mm256_fmadd_pd(x, v0, s10);
                s11 = _mm256_fmadd_pd(x, v1, s11);
                x = _mm256_loadu_pd(a2 + p);
                s20 = _mm256_fmadd_pd(x, v0, s20);
                s21 = _mm256_fmadd_pd(x, v1, s21);
                x = _mm256_loadu_pd(a3 + p);
                s30 = _mm256_fmadd_pd(x, v0, s30);
                s31 = _mm256_fmadd_pd(x, v1, s31);
            }
            double r[8] = {hsum(s00), hsum(s01), hsum(s10), hsum(s11), hsum(s20), hsum(s21), hsum(s30), hsum(s31)};
            for (std::size_t p = kv; p < k; ++p) {
                r[0] += a0[p] * b0[p];
                r[1] += a0[p] * b1[p];
                r[2] += a1[p] * b0[p];
                r[3] += a1[p] * b1[p];
                r[4] += a2[p] * b0[p];
                r[5] += a2[p] * b1[p];
                r[6] += a3[p] * b0[p];
                r[7] += a3[p] * b1[p];
            }
            for (std::size_t q = 0; q < 4; ++q) {
                c[(i + q) * n + j] += r[2 * q];
                c[(i + q) * n + j + 1] += r[2 * q + 1];
            }
        }
        for (; j < n; ++j) {
            for (std::size_t q = 0; q < 4; ++q) c[(i + q) * n + j] += dot(a + (i + q) * k, b + j * k, k);
        }
    }
    for (; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
    }
}

// C tile of Rows x 8 kept in registers while p runs over k. With TransA the
// left operand is stored k x m (a(r, p) = a[p * lda + r]), otherwise m x k.
template <bool TransA, std::size_t Rows>
inline void tile_update(std::size_t n, std::size_t k, std::size_t lda, const double* a, const double* b, double* c,
                        std::size_t j);

template <bool TransA>
inline void tile_update_4(std::size_t n, std::size_t k, std::size_t lda, const double* a, const double* b, double* c,
                          std::size_t j) {
    double* c0 = c + j;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    __m256d r00 = _mm256_loadu_pd(c0), r01 = _mm256_loadu_pd(c0 + 4);
    __m256d r10 = _mm256_loadu_pd(c1), r11 = _mm256_loadu_pd(c1 + 4);
    __m256d r20 = _mm256_loadu_pd(c2), r21 = _mm256_loadu_pd(c2 + 4);
    __m256d r30 = _mm256_loadu_pd(c3), r31 = _mm256_loadu_pd(c3 + 4);
    const double* bp = b + j;
    const std::size_t step = TransA ? lda : 1;
    const std::size_t row = TransA ? 1 : lda;
    const double* ap = a;
    for (std::size_t p = 0; p < k; ++p, bp += n, ap += step) {
        const __m256d b0 = _mm256_loadu_pd(bp), b1 = _mm256_loadu_pd(bp + 4);
        __m256d x = _mm256_broadcast_sd(ap);
        r00 = _mm256_fmadd_pd(x, b0, r00);
        r01 = _mm256_fmadd_pd(x, b1, r01);
        x = _mm256_broadcast_sd(ap + row);
        r10 = _mm256_fmadd_pd(x, b0, r10);
        r11 = _mm256_fmadd_pd(x, b1, r11);
        x = _mm256_broadcast_sd(ap + 2 * row);
        r20 = _mm256_fmadd_pd(x, b0, r20);
        r21 = _mm256_fmadd_pd(x, b1, r21);
        x = _mm256_broadcast_sd(ap + 3 * row);
        r30 = _mm256_fmadd_pd(x, b0, r30);
        r31 = _mm256_fmadd_pd(x, b1, r31);
    }
    _mm256_storeu_pd(c0, r00);
    _mm256_storeu_pd(c0 + 4, r01);
    _mm256_storeu_pd(c1, r10);
    _mm256_storeu_pd(c1 + 4, r11);
    _mm256_storeu_pd(c2, r20);
    _mm256_storeu_pd(c2 + 4, r21);
    _mm256_storeu_pd(c3, r30);
    _mm256_storeu_pd(c3 + 4, r31);
}

template <bool TransA>
inline void tile_update_1(std::size_t n, std::size_t k, std::size_t lda, const double* a, const double* b, double* c,
                          std::size_t j) {
    __m256d r0 = _mm256_loadu_pd(c + j), r1 = _mm256_loadu_pd(c + j + 4);
    const double* bp = b + j;
    for (std::size_t p = 0; p < k; ++p, bp += n) {
        const __m256d x = _mm256_broadcast_sd(TransA ? a + p * lda : a + p);
        r0 = _mm256_fmadd_pd(x, _mm256_loadu_pd(bp), r0);
        r1 = _mm256_fmadd_pd(x, _mm256_loadu_pd(bp + 4), r1);
    }
    _mm256_storeu_pd(c + j, r0);
    _mm256_storeu_pd(c + j + 4, r1);
}

template <bool TransA, std::size_t Rows>
inline void tile_update(std::size_t n, std::size_t k, std::size_t lda, const double* a, const double* b, double* c,
                        std::size_t j) {
    if constexpr (Rows == 4) {
        tile_update_4<TransA>(n, k, lda, a, b, c, j);
    } else {
        tile_update_1<TransA>(n, k, lda, a, b, c, j);
    }
}

template <bool TransA, std::size_t Rows>
inline void row_block(std::size_t n, std::size_t k, std::size_t lda, const double* a, const double* b, double* c) {
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) tile_update<TransA, Rows>(n, k, lda, a, b, c, j);
    for (; j < n; ++j) {
        for (std::size_t r = 0; r < Rows; ++r) {
            double s = c[r * n + j];
            for (std::size_t p = 0; p < k; ++p) s += (TransA ? a[p * lda + r] : a[r * lda + p]) * b[p * n + j];
            c[r * n + j] = s;
        }
    }
}

template <bool TransA>
void gemm_blocked(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    const std::size_t lda = TransA ? m : k;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) row_block<TransA, 4>(n, k, lda, TransA ? a + i : a + i * lda, b, c + i * n);
    for (; i < m; ++i) row_block<TransA, 1>(n, k, lda, TransA ? a + i : a + i * lda, b, c + i * n);
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    gemm_blocked<false>(m, n, k, a, b, c);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
    gemm_blocked<true>(m, n, k, a, b, c);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) { row_axpy(n, alpha, x, y); }

void adam(std::size_t n, double* p, double* m, double* v, const double* g, double lr, double beta1, double beta2,
          double eps, double c1, double c2) {
    const __m256d b1 = _mm256_set1_pd(beta1), nb1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d b2 = _mm256_set1_pd(beta2), nb2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d ic1 = _mm256_set1_pd(1.0 / c1), ic2 = _mm256_set1_pd(1.0 / c2);
    const __m256d vlr = _mm256_set1_pd(lr), veps = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gv = _mm256_loadu_pd(g + i);
        const __m256d mv = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(nb1, gv));
        const __m256d vv =
            _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(nb2, _mm256_mul_pd(gv, gv)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, ic2)), veps);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, _mm256_mul_pd(mv, ic1)), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
}

void blend(std::size_t n, double tau, const double* s, double* t) {
    const __m256d a = _mm256_set1_pd(tau), b = _mm256_set1_pd(1.0 - tau);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(t + i, _mm256_add_pd(_mm256_mul_pd(a, _mm256_loadu_pd(s + i)),
                                              _mm256_mul_pd(b, _mm256_loadu_pd(t + i))));
    }
    for (; i < n; ++i) t[i] = tau * s[i] + (1.0 - tau) * t[i];
}

}  // namespace

const KernelTable& table() {
    static const KernelTable t{"avx2", gemm_nt, gemm_nn, gemm_tn, axpy, adam, blend};
    return t;
}

}  // namespace hmptcp::nn::avx2
