#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cinsight {

enum class ErrorKind {
    InvalidInput,
    Parse,
    InvalidConfig,
    Stability,
    Integration,
    InsufficientData,
    Divergence,
    UndefinedCorrelation,
    UnsupportedMetric,
    GraphInvariant,
    Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; `kind()` lets callers branch
// without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    // Text without the kind prefix, for rethrowing with added context.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

} // namespace cinsight
