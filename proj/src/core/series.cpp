#include "cinsight/series.hpp"

#include "cinsight/error.hpp"

#include <algorithm>
#include <cmath>

namespace cinsight {

namespace {

constexpr double kConstantRangeEps = 1e-12;

bool all_unit_interval(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return v >= 0.0 && v <= 1.0; });
}

} // namespace

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::InvalidConfig: return "invalid config";
    case ErrorKind::Stability: return "stability error";
    case ErrorKind::Integration: return "integration error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::UndefinedCorrelation: return "undefined correlation";
    case ErrorKind::UnsupportedMetric: return "unsupported metric";
    case ErrorKind::GraphInvariant: return "graph invariant violated";
    case ErrorKind::Io: return "io error";
    }
    return "error";
}

MultivariateSeries::MultivariateSeries(std::size_t n_vars, std::size_t length,
                                       std::vector<double> values,
                                       std::vector<std::string> var_names,
                                       std::optional<std::vector<NormRange>> norm_meta)
    : n_vars_(n_vars), length_(length), values_(std::move(values)),
      var_names_(std::move(var_names)), norm_meta_(std::move(norm_meta)) {
    if (n_vars_ < 1 || length_ < 2) {
        throw Error(ErrorKind::InvalidInput,
                    "series needs N >= 1 and T >= 2, got N=" + std::to_string(n_vars_) +
                        " T=" + std::to_string(length_));
    }
    if (values_.size() != n_vars_ * length_) {
        throw Error(ErrorKind::InvalidInput, "value buffer does not match N x T");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k])) {
            throw Error(ErrorKind::InvalidInput,
                        "non-finite value at variable " + std::to_string(k / length_) +
                            ", t=" + std::to_string(k % length_));
        }
    }
    if (var_names_.empty()) {
        for (std::size_t i = 0; i < n_vars_; ++i) var_names_.push_back("x" + std::to_string(i));
    } else if (var_names_.size() != n_vars_) {
        throw Error(ErrorKind::InvalidInput, "expected one name per variable");
    }
    if (norm_meta_) {
        if (norm_meta_->size() != n_vars_) {
            throw Error(ErrorKind::InvalidInput, "expected one norm range per variable");
        }
        if (!all_unit_interval(values_)) {
            throw Error(ErrorKind::InvalidInput, "normalized series has values outside [0, 1]");
        }
    }
}

MultivariateSeries MultivariateSeries::with_value(std::size_t var, std::size_t t,
                                                  double value) const {
    if (var >= n_vars_ || t >= length_) {
        throw Error(ErrorKind::InvalidInput, "entry index out of range");
    }
    std::vector<double> copy = values_;
    copy[var * length_ + t] = value;
    auto meta = norm_meta_;
    if (meta && !(value >= 0.0 && value <= 1.0)) meta.reset();
    return MultivariateSeries(n_vars_, length_, std::move(copy), var_names_, std::move(meta));
}

MultivariateSeries normalize_minmax(const MultivariateSeries& series) {
    const std::size_t n = series.n_vars();
    const std::size_t len = series.length();
    std::vector<double> out(n * len);
    std::vector<NormRange> ranges(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = series.row(i);
        auto [lo, hi] = std::minmax_element(row.begin(), row.end());
        ranges[i] = {*lo, *hi};
        const double span = *hi - *lo;
        for (std::size_t t = 0; t < len; ++t) {
            out[i * len + t] = span < kConstantRangeEps ? 0.0 : (row[t] - *lo) / span;
        }
    }
    return MultivariateSeries(n, len, std::move(out), series.var_names(), std::move(ranges));
}

MultivariateSeries apply_normalization(const MultivariateSeries& series,
                                       std::span<const NormRange> ranges) {
    const std::size_t n = series.n_vars();
    const std::size_t len = series.length();
    if (ranges.size() != n) {
        throw Error(ErrorKind::InvalidInput, "normalization ranges do not match variable count");
    }
    std::vector<double> out(n * len);
    for (std::size_t i = 0; i < n; ++i) {
        const double span = ranges[i].max - ranges[i].min;
        for (std::size_t t = 0; t < len; ++t) {
            out[i * len + t] =
                span < kConstantRangeEps ? 0.0 : (series(i, t) - ranges[i].min) / span;
        }
    }
    std::optional<std::vector<NormRange>> meta;
    if (all_unit_interval(out)) meta.emplace(ranges.begin(), ranges.end());
    return MultivariateSeries(n, len, std::move(out), series.var_names(), std::move(meta));
}

} // namespace cinsight
