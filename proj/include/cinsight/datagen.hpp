#pragma once

#include "cinsight/graph.hpp"
#include "cinsight/series.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace cinsight {

/// Lagged coefficient tensor A[lag][src][dst] for lags 1..max_lag:
/// X_dst,t = sum_lag sum_src A[lag][src][dst] X_src,t-lag + noise.
class VarCoefficients {
public:
    VarCoefficients(std::size_t n_vars, std::size_t max_lag);

    std::size_t n_vars() const noexcept { return n_vars_; }
    std::size_t max_lag() const noexcept { return max_lag_; }

    double at(std::size_t lag, std::size_t src, std::size_t dst) const;
    double& at(std::size_t lag, std::size_t src, std::size_t dst);

    /// Largest |eigenvalue| of the VAR companion matrix.
    double spectral_radius() const;

    /// One edge per ordered pair with any nonzero coefficient; the lag is the
    /// one with the largest |coefficient| (smaller lag on ties) and the
    /// score is that magnitude.
    TemporalGraph support_graph() const;

private:
    std::size_t n_vars_;
    std::size_t max_lag_;
    std::vector<double> values_;
};

struct GeneratedData {
    MultivariateSeries series;
    GroundTruth truth;
    // Generating coefficients for the linear generators (motifs, VAR).
    std::optional<VarCoefficients> coefficients;
};

enum class MotifKind { Fork, VStructure, Mediator, Diamond };

std::string_view to_string(MotifKind kind);
MotifKind parse_motif_kind(std::string_view name);

struct MotifEdge {
    std::size_t src;
    std::size_t dst;
};

std::size_t motif_size(MotifKind kind);
/// Cross edges of the motif; node 0 is A, 1 is B, ...
std::vector<MotifEdge> motif_topology(MotifKind kind);

struct MotifConfig {
    MotifKind kind = MotifKind::Fork;
    std::size_t length = 1000;
    // One lag per cross edge in motif_topology order; empty draws each lag
    // uniformly from {1, 2, 3}.
    std::vector<std::size_t> lags;
    double noise_std = 1.0;
    double self_weight = 0.5;
    std::uint64_t seed = 0;
};

/// Linear additive-noise motif: child_t = sum_p w_p parent_{t-lag_p}
/// + self_weight * child_{t-1} + eps, with w_p uniform on +-[0.5, 1.0].
/// Truth holds the cross edges with their lags and a lag-1 self-loop on
/// every node.
GeneratedData gen_motif(const MotifConfig& config);

struct Lorenz96Config {
    std::size_t n_vars = 10;
    std::size_t length = 1000;
    double forcing = 8.0;
    double dt = 0.05;
    std::size_t burn_in = 1000;
    bool has_lags = true;
    double noise_std = 0.0; // optional observation noise
    std::uint64_t seed = 0;
};

/// Fixed-step RK4 integration of dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F,
/// one step per sample after `burn_in` discarded steps. Truth parents of x_i
/// are {i-2, i-1, i, i+1} at lag 1; neighbouring pairs appear in both
/// directions.
GeneratedData gen_lorenz96(const Lorenz96Config& config);

/// Simulates the VAR defined by `coefficients` with Gaussian noise after a
/// short discarded burn-in. Rejects coefficient tensors whose companion
/// spectral radius is >= 1.
GeneratedData gen_linear_var(const VarCoefficients& coefficients, std::size_t length,
                             double noise_std, std::uint64_t seed);

struct RandomVarConfig {
    std::size_t n_vars = 5;
    std::size_t n_cross_edges = 4;
    std::size_t max_lag = 3;
    double min_weight = 0.5;
    double max_weight = 0.9;
    double self_weight = 0.4; // lag-1 autoregression on every node; 0 disables
    std::uint64_t seed = 0;
};

/// Random sparse, stable coefficient tensor: `n_cross_edges` distinct
/// unordered pairs, one direction each, lag uniform on 1..max_lag, weight
/// magnitude uniform on [min_weight, max_weight] with random sign.
VarCoefficients random_sparse_var(const RandomVarConfig& config);

} // namespace cinsight
