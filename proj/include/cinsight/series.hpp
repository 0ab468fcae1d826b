#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cinsight {

struct NormRange {
    double min = 0.0;
    double max = 0.0;
    bool operator==(const NormRange&) const = default;
};

/// N x T observation matrix, row i holds variable i over time.
///
/// Immutable once built; the constructor validates shape, finiteness and,
/// when normalization metadata is attached, that every value lies in [0, 1].
class MultivariateSeries {
public:
    MultivariateSeries(std::size_t n_vars, std::size_t length, std::vector<double> values,
                       std::vector<std::string> var_names = {},
                       std::optional<std::vector<NormRange>> norm_meta = std::nullopt);

    std::size_t n_vars() const noexcept { return n_vars_; }
    std::size_t length() const noexcept { return length_; }

    double operator()(std::size_t var, std::size_t t) const noexcept {
        return values_[var * length_ + t];
    }
    std::span<const double> row(std::size_t var) const noexcept {
        return {values_.data() + var * length_, length_};
    }
    std::span<const double> values() const noexcept { return values_; }

    const std::vector<std::string>& var_names() const noexcept { return var_names_; }
    const std::optional<std::vector<NormRange>>& norm_meta() const noexcept { return norm_meta_; }

    /// Copy with a single entry replaced. Drops normalization metadata when
    /// the new value leaves [0, 1].
    MultivariateSeries with_value(std::size_t var, std::size_t t, double value) const;

    bool operator==(const MultivariateSeries&) const = default;

private:
    std::size_t n_vars_;
    std::size_t length_;
    std::vector<double> values_;
    std::vector<std::string> var_names_;
    std::optional<std::vector<NormRange>> norm_meta_;
};

/// Per-variable affine rescale to [0, 1]; (min, max) recorded in norm_meta.
/// Rows with max - min below 1e-12 map to all zeros.
MultivariateSeries normalize_minmax(const MultivariateSeries& series);

/// Applies previously recorded ranges (e.g. from a training series) to a new
/// series. Values are not clipped, so the result carries no norm_meta unless
/// every entry lands in [0, 1].
MultivariateSeries apply_normalization(const MultivariateSeries& series,
                                       std::span<const NormRange> ranges);

} // namespace cinsight
