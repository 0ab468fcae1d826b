#pragma once

#include "cinsight/series.hpp"

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cinsight {

// ---------------------------------------------------------------------------
// Causal mask

struct MaskSpec {
    std::size_t n_vars = 1;
    std::size_t window = 2; // lags 0..window-1
    std::size_t target = 0;
};

/// Open/closed flag per (variable, lag) input slot, laid out variable-major:
/// slot (i, lag) lives at i * window + lag.
class CausalMask {
public:
    explicit CausalMask(const MaskSpec& spec);

    std::size_t n_vars() const noexcept { return n_vars_; }
    std::size_t window() const noexcept { return window_; }
    bool open(std::size_t var, std::size_t lag) const { return open_[var * window_ + lag] != 0; }
    std::size_t open_count() const;
    std::span<const std::uint8_t> flags() const noexcept { return open_; }

private:
    std::size_t n_vars_;
    std::size_t window_;
    std::vector<std::uint8_t> open_;
};

/// Every variable is visible at lags 1..K-1, other variables also at lag 0,
/// and the target's own lag-0 slot is closed.
CausalMask build_causal_mask(const MaskSpec& spec);

// ---------------------------------------------------------------------------
// Sliding windows

/// Row r is the flattened input window ending at t = first_t + r, with
/// column i * window + lag holding X[i][t - lag].
struct WindowMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t window = 0;
    std::size_t first_t = 0;
    std::vector<double> data;

    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

WindowMatrix build_windows(const MultivariateSeries& series, std::size_t window);

// ---------------------------------------------------------------------------
// Network head: dense layers, tanh on hidden layers, scalar linear output.

/// Layer sizes [inputs, hidden..., 1]; no hidden layers gives a linear model.
/// Parameters are flat: per layer, row-major weights (out x in) then biases.
class HeadShape {
public:
    HeadShape(std::size_t n_inputs, std::vector<std::size_t> hidden);

    std::size_t n_inputs() const noexcept { return sizes_.front(); }
    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    std::size_t n_params() const noexcept { return n_params_; }
    std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
    std::size_t bias_offset(std::size_t layer) const {
        return offsets_[layer] + sizes_[layer + 1] * sizes_[layer];
    }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;
    std::size_t n_params_ = 0;
};

/// Mean squared error of the head over all window rows. When `grad` is
/// non-empty it receives d(loss)/d(params); gradients of closed input
/// slots are zeroed.
double head_loss(const HeadShape& shape, std::span<const double> params,
                 std::span<const std::uint8_t> input_open, const WindowMatrix& windows,
                 std::span<const double> targets, std::span<double> grad);

/// Head outputs for every window row, closed input slots read as zero.
std::vector<double> head_forward(const HeadShape& shape, std::span<const double> params,
                                 std::span<const std::uint8_t> input_open,
                                 const WindowMatrix& windows);

// ---------------------------------------------------------------------------
// Predictor

enum class Backbone { Linear, MLP };
enum class Optimizer { GradientDescent, Adam };
enum class Imputation { TrainingMean, Zero };

std::string_view to_string(Backbone b);
std::string_view to_string(Optimizer o);
std::string_view to_string(Imputation i);
Backbone parse_backbone(std::string_view s);
Optimizer parse_optimizer(std::string_view s);
Imputation parse_imputation(std::string_view s);

struct PredictorConfig {
    Backbone backbone = Backbone::MLP;
    std::size_t window = 5;
    std::vector<std::size_t> hidden_sizes = {32}; // MLP only
    Optimizer optimizer = Optimizer::Adam;
    double learning_rate = 1e-2;
    std::size_t max_epochs = 2000;
    std::size_t patience = 50;
    // An epoch counts as an improvement when the loss drops below
    // best * (1 - min_rel_improvement).
    double min_rel_improvement = 1e-6;
    std::uint64_t seed = 0;

    void validate() const;
    /// Hidden layer sizes actually used (empty for Linear).
    std::vector<std::size_t> effective_hidden() const;
};

nlohmann::json to_json(const PredictorConfig& config);
PredictorConfig predictor_config_from_json(const nlohmann::json& doc);

/// Predictions for every (variable, t). Entries before `valid_from` have no
/// complete input window and hold NaN.
struct PredictionMatrix {
    std::size_t n_vars = 0;
    std::size_t length = 0;
    std::size_t valid_from = 0;
    std::vector<double> values;

    double operator()(std::size_t var, std::size_t t) const { return values[var * length + t]; }
    std::span<const double> valid_row(std::size_t var) const {
        return {values.data() + var * length + valid_from, length - valid_from};
    }
};

class ForwardPassCounter {
public:
    ForwardPassCounter() = default;
    ForwardPassCounter(const ForwardPassCounter& other) : count_(other.value()) {}
    ForwardPassCounter& operator=(const ForwardPassCounter& other) {
        count_.store(other.value());
        return *this;
    }
    void increment() const { count_.fetch_add(1, std::memory_order_relaxed); }
    std::size_t value() const { return count_.load(std::memory_order_relaxed); }
    void reset() const { count_.store(0); }

private:
    mutable std::atomic<std::size_t> count_{0};
};

/// Frozen f_theta: one independent head per target variable behind a
/// predict-only interface. Inference is const and safe to call
/// concurrently; each call bumps the forward-pass counter exactly once.
class TrainedPredictor {
public:
    TrainedPredictor(PredictorConfig config, std::size_t n_vars,
                     std::vector<std::vector<double>> head_params,
                     std::vector<double> training_means,
                     std::optional<std::vector<NormRange>> input_norm = std::nullopt,
                     std::vector<double> epoch_losses = {});

    const PredictorConfig& config() const noexcept { return config_; }
    std::size_t n_vars() const noexcept { return n_vars_; }
    std::size_t window() const noexcept { return config_.window; }
    const HeadShape& head_shape() const noexcept { return shape_; }
    std::span<const double> head_params(std::size_t target) const { return heads_.at(target); }
    const std::vector<double>& training_means() const noexcept { return means_; }
    const std::optional<std::vector<NormRange>>& input_norm() const noexcept { return input_norm_; }
    const std::vector<double>& epoch_losses() const noexcept { return epoch_losses_; }
    /// Training loss of the returned parameters (best epoch).
    double final_loss() const;

    /// Linear backbone only: weight of slot (src, lag) in head `dst`.
    double linear_weight(std::size_t dst, std::size_t src, std::size_t lag) const;

    PredictionMatrix predict_series(const MultivariateSeries& series) const;

    /// Predicts each target j from Pa(j) only: every input slot of a variable
    /// outside parents[j] (all lags) is replaced by the imputation value.
    PredictionMatrix predict_with_parents(const MultivariateSeries& series,
                                          const std::vector<std::vector<std::size_t>>& parents,
                                          Imputation imputation = Imputation::TrainingMean) const;

    std::size_t forward_passes() const noexcept { return counter_.value(); }
    void reset_forward_passes() const noexcept { counter_.reset(); }

private:
    void check_series(const MultivariateSeries& series) const;

    PredictorConfig config_;
    std::size_t n_vars_;
    HeadShape shape_;
    std::vector<std::vector<double>> heads_;
    std::vector<CausalMask> masks_;
    std::vector<double> means_;
    std::optional<std::vector<NormRange>> input_norm_;
    std::vector<double> epoch_losses_;
    ForwardPassCounter counter_;
};

/// Full-batch training of one head per target on the windows t = K-1..T-1,
/// with early stopping on the training loss. Deterministic given config.seed.
TrainedPredictor train(const MultivariateSeries& series, const PredictorConfig& config);

nlohmann::json to_json(const TrainedPredictor& predictor);
TrainedPredictor predictor_from_json(const nlohmann::json& doc);
void save_predictor(const TrainedPredictor& predictor, const std::filesystem::path& path);
TrainedPredictor load_predictor(const std::filesystem::path& path);

} // namespace cinsight
