#include "cinsight/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define CINSIGHT_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#else
#define CINSIGHT_HAVE_AVX2_KERNELS 0
#endif

namespace cinsight::kernels {

#if CINSIGHT_HAVE_AVX2_KERNELS

// Functions carry their own target attribute so the rest of the binary stays
// baseline x86-64 and this file needs no special compile flags.
#define CINSIGHT_AVX2 __attribute__((target("avx2,fma")))

namespace {

CINSIGHT_AVX2 inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

CINSIGHT_AVX2 double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
    }
    for (; k + 4 <= n; k += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) acc += a[k] * b[k];
    return acc;
}

CINSIGHT_AVX2 void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d vy = _mm256_loadu_pd(y + k);
        _mm256_storeu_pd(y + k, _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + k))));
    }
    for (; k < n; ++k) y[k] += alpha * x[k];
}

CINSIGHT_AVX2 void abs_diff_avx2(const double* a, const double* b, double* out, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        _mm256_storeu_pd(out + k, _mm256_andnot_pd(sign, d));
    }
    for (; k < n; ++k) {
        const double d = a[k] - b[k];
        out[k] = d < 0.0 ? -d : d;
    }
}

CINSIGHT_AVX2 double sq_diff_sum_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double total = hsum(acc);
    for (; k < n; ++k) {
        const double d = a[k] - b[k];
        total += d * d;
    }
    return total;
}

CINSIGHT_AVX2 void gemv_avx2(const double* A, std::size_t rows, std::size_t cols,
                             const double* x, const double* bias, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = (bias ? bias[r] : 0.0) + dot_avx2(A + r * cols, x, cols);
    }
}

constexpr KernelTable kAvx2{Isa::Avx2,     dot_avx2,         axpy_avx2,
                            abs_diff_avx2, sq_diff_sum_avx2, gemv_avx2};

} // namespace

const KernelTable* avx2_table() {
    static const bool supported =
        __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &kAvx2 : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

} // namespace cinsight::kernels
