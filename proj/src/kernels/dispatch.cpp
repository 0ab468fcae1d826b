#include "cinsight/kernels/kernels.hpp"

#include "cinsight/error.hpp"

#include <cstdlib>
#include <string>

namespace cinsight::kernels {

namespace {

const KernelTable& select_table() {
    const char* forced = std::getenv("CINSIGHT_KERNELS");
    const std::string want = forced ? forced : "";
    if (want == "scalar") return scalar_table();
    if (want == "avx2" && avx2_table()) return *avx2_table();
    if (want == "neon" && neon_table()) return *neon_table();
    if (const auto* t = avx2_table()) return *t;
    if (const auto* t = neon_table()) return *t;
    return scalar_table();
}

void check_sizes(std::size_t a, std::size_t b) {
    if (a != b) throw Error(ErrorKind::InvalidInput, "kernel operand sizes differ");
}

} // namespace

std::string_view to_string(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
    }
    return "unknown";
}

const KernelTable& active() {
    static const KernelTable& table = select_table();
    return table;
}

double dot(std::span<const double> a, std::span<const double> b) {
    check_sizes(a.size(), b.size());
    return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    check_sizes(x.size(), y.size());
    active().axpy(alpha, x.data(), y.data(), x.size());
}

void abs_diff(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    check_sizes(a.size(), b.size());
    check_sizes(a.size(), out.size());
    active().abs_diff(a.data(), b.data(), out.data(), a.size());
}

double sq_diff_sum(std::span<const double> a, std::span<const double> b) {
    check_sizes(a.size(), b.size());
    return active().sq_diff_sum(a.data(), b.data(), a.size());
}

} // namespace cinsight::kernels
