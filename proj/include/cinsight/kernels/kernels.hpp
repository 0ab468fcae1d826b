#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense inner loops used by the predictor, probing and scoring code.
//
// Every kernel has a scalar reference implementation; vectorized variants
// (AVX2+FMA on x86-64, NEON on AArch64) are picked once at startup based on
// what the CPU reports. Setting CINSIGHT_KERNELS=scalar forces the reference
// path. Reductions (dot, sq_diff_sum) may differ from the scalar result in
// the last bits because lanes are summed in a different order; elementwise
// kernels are bit-identical across variants.

namespace cinsight::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

struct KernelTable {
    Isa isa;
    // sum_k a[k] * b[k]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[k] += alpha * x[k]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out[k] = |a[k] - b[k]|
    void (*abs_diff)(const double* a, const double* b, double* out, std::size_t n);
    // sum_k (a[k] - b[k])^2
    double (*sq_diff_sum)(const double* a, const double* b, std::size_t n);
    // y = A x + bias, A row-major rows x cols; bias may be null
    void (*gemv)(const double* A, std::size_t rows, std::size_t cols, const double* x,
                 const double* bias, double* y);
};

const KernelTable& scalar_table();
// Null when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// The table selected for this process. Stable for the process lifetime.
const KernelTable& active();

// Span conveniences over active(); sizes must match.
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void abs_diff(std::span<const double> a, std::span<const double> b, std::span<double> out);
double sq_diff_sum(std::span<const double> a, std::span<const double> b);

} // namespace cinsight::kernels
