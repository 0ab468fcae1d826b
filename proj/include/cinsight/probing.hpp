#pragma once

#include "cinsight/predictor.hpp"
#include "cinsight/series.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cinsight {

enum class ClampMode { PerVariableMax, Zero, Fixed };

std::string_view to_string(ClampMode mode);
ClampMode parse_clamp_mode(std::string_view s);

/// Which value x* to write and where. The clamp index t0 defaults to the
/// first time step whose whole response window (t0 .. t0 + K - 1) falls in
/// the valid prediction range, i.e. K - 1.
struct ClampPolicy {
    ClampMode mode = ClampMode::PerVariableMax;
    double fixed_value = 0.0;
    std::optional<std::size_t> t0;

    std::size_t resolve_t0(std::size_t window) const { return t0.value_or(window - 1); }
    void validate(std::size_t length, std::size_t window = 1) const;
};

/// x* for variable `var` under `policy`.
double clamp_value(const MultivariateSeries& series, std::size_t var, const ClampPolicy& policy);

/// Series identical to the input except entry (var, t0) = x*. Without a
/// window, an unset t0 resolves to 0.
MultivariateSeries clamp_input(const MultivariateSeries& series, std::size_t var,
                               const ClampPolicy& policy, std::size_t window = 1);

/// S[i][j][t] = |prediction_j,t with var i clamped - baseline prediction_j,t|.
/// Entries before valid_from are zero.
class InfluenceTensor {
public:
    InfluenceTensor(std::size_t n_vars, std::size_t length, std::size_t valid_from,
                    std::size_t t0, std::vector<double> values);

    std::size_t n_vars() const noexcept { return n_; }
    std::size_t length() const noexcept { return len_; }
    std::size_t valid_from() const noexcept { return valid_from_; }
    std::size_t t0() const noexcept { return t0_; }

    double operator()(std::size_t src, std::size_t dst, std::size_t t) const {
        return values_[(src * n_ + dst) * len_ + t];
    }
    std::span<const double> slice(std::size_t src, std::size_t dst) const {
        return {values_.data() + (src * n_ + dst) * len_, len_};
    }
    std::span<const double> values() const noexcept { return values_; }

    bool operator==(const InfluenceTensor&) const = default;

private:
    std::size_t n_;
    std::size_t len_;
    std::size_t valid_from_;
    std::size_t t0_;
    std::vector<double> values_;
};

struct ProbeResult {
    InfluenceTensor tensor;
    std::vector<double> clamp_values; // x* per variable
};

/// One baseline pass plus one clamped pass per variable (N + 1 predictor
/// calls). The clamped passes are independent; with threads > 1 they run
/// concurrently and the result is identical to the sequential one.
ProbeResult influence_tensor(const TrainedPredictor& predictor, const MultivariateSeries& series,
                             const ClampPolicy& policy, std::size_t threads = 1);

/// Uniform (Fisher-Yates) shuffle of the entries at t >= valid_from across
/// all (i, j, t); the multiset of values is preserved.
InfluenceTensor permute_tensor(const InfluenceTensor& tensor, std::uint64_t seed);

// Binary layout: four little-endian uint64 (N, N, T, valid_from) followed by
// N*N*T little-endian float64 in (i, j, t) order. The JSON sidecar carries
// the clamp policy, t0 and per-variable x*.
void save_tensor(const ProbeResult& probe, const ClampPolicy& policy,
                 const std::filesystem::path& bin_path, const std::filesystem::path& json_path);
InfluenceTensor load_tensor(const std::filesystem::path& bin_path,
                            const std::optional<std::filesystem::path>& json_path);

nlohmann::json to_json(const ClampPolicy& policy);

} // namespace cinsight
