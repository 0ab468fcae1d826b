#include "cinsight/kernels/kernels.hpp"

#include <cmath>

namespace cinsight::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

void abs_diff_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = std::fabs(a[k] - b[k]);
}

double sq_diff_sum_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return acc;
}

void gemv_scalar(const double* A, std::size_t rows, std::size_t cols, const double* x,
                 const double* bias, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = (bias ? bias[r] : 0.0) + dot_scalar(A + r * cols, x, cols);
    }
}

constexpr KernelTable kScalar{Isa::Scalar,     dot_scalar,         axpy_scalar,
                              abs_diff_scalar, sq_diff_sum_scalar, gemv_scalar};

} // namespace

const KernelTable& scalar_table() { return kScalar; }

} // namespace cinsight::kernels
