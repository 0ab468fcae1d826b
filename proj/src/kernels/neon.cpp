#include "cinsight/kernels/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace cinsight::kernels {

#if defined(__aarch64__)

namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + k), vld1q_f64(b + k));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + k + 2), vld1q_f64(b + k + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; k < n; ++k) acc += a[k] * b[k];
    return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        vst1q_f64(y + k, vaddq_f64(vld1q_f64(y + k), vmulq_f64(va, vld1q_f64(x + k))));
    }
    for (; k < n; ++k) y[k] += alpha * x[k];
}

void abs_diff_neon(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        vst1q_f64(out + k, vabdq_f64(vld1q_f64(a + k), vld1q_f64(b + k)));
    }
    for (; k < n; ++k) {
        const double d = a[k] - b[k];
        out[k] = d < 0.0 ? -d : d;
    }
}

double sq_diff_sum_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + k), vld1q_f64(b + k));
        acc = vfmaq_f64(acc, d, d);
    }
    double total = vaddvq_f64(acc);
    for (; k < n; ++k) {
        const double d = a[k] - b[k];
        total += d * d;
    }
    return total;
}

void gemv_neon(const double* A, std::size_t rows, std::size_t cols, const double* x,
               const double* bias, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = (bias ? bias[r] : 0.0) + dot_neon(A + r * cols, x, cols);
    }
}

constexpr KernelTable kNeon{Isa::Neon,     dot_neon,         axpy_neon,
                            abs_diff_neon, sq_diff_sum_neon, gemv_neon};

} // namespace

// Advanced SIMD is mandatory on AArch64.
const KernelTable* neon_table() { return &kNeon; }

#else

const KernelTable* neon_table() { return nullptr; }

#endif

} // namespace cinsight::kernels
