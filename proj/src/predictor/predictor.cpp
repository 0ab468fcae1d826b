#include "cinsight/predictor.hpp"

#include "cinsight/error.hpp"
#include "cinsight/io.hpp"
#include "cinsight/kernels/kernels.hpp"
#include "cinsight/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace cinsight {

std::string_view to_string(Backbone b) { return b == Backbone::Linear ? "linear" : "mlp"; }
std::string_view to_string(Optimizer o) { return o == Optimizer::Adam ? "adam" : "gd"; }
std::string_view to_string(Imputation i) {
    return i == Imputation::TrainingMean ? "mean" : "zero";
}

Backbone parse_backbone(std::string_view s) {
    if (s == "linear") return Backbone::Linear;
    if (s == "mlp") return Backbone::MLP;
    throw Error(ErrorKind::InvalidConfig, "unknown backbone '" + std::string(s) + "'");
}

Optimizer parse_optimizer(std::string_view s) {
    if (s == "adam") return Optimizer::Adam;
    if (s == "gd" || s == "sgd") return Optimizer::GradientDescent;
    throw Error(ErrorKind::InvalidConfig, "unknown optimizer '" + std::string(s) + "'");
}

Imputation parse_imputation(std::string_view s) {
    if (s == "mean") return Imputation::TrainingMean;
    if (s == "zero") return Imputation::Zero;
    throw Error(ErrorKind::InvalidConfig, "unknown imputation '" + std::string(s) + "'");
}

void PredictorConfig::validate() const {
    if (window < 2) throw Error(ErrorKind::InvalidConfig, "window K must be >= 2");
    if (max_epochs < 1) throw Error(ErrorKind::InvalidConfig, "max_epochs must be >= 1");
    if (patience < 1) throw Error(ErrorKind::InvalidConfig, "patience must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw Error(ErrorKind::InvalidConfig, "learning_rate must be > 0");
    }
    if (!(min_rel_improvement >= 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "min_rel_improvement must be >= 0");
    }
    if (backbone == Backbone::MLP) {
        if (hidden_sizes.empty()) throw Error(ErrorKind::InvalidConfig, "MLP needs a hidden layer");
        for (auto h : hidden_sizes) {
            if (h < 1) throw Error(ErrorKind::InvalidConfig, "hidden sizes must be >= 1");
        }
    }
}

std::vector<std::size_t> PredictorConfig::effective_hidden() const {
    return backbone == Backbone::MLP ? hidden_sizes : std::vector<std::size_t>{};
}

nlohmann::json to_json(const PredictorConfig& c) {
    return {{"backbone", to_string(c.backbone)},
            {"window", c.window},
            {"hidden_sizes", c.hidden_sizes},
            {"optimizer", to_string(c.optimizer)},
            {"learning_rate", c.learning_rate},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"min_rel_improvement", c.min_rel_improvement},
            {"seed", c.seed}};
}

PredictorConfig predictor_config_from_json(const nlohmann::json& doc) {
    try {
        PredictorConfig c;
        c.backbone = parse_backbone(doc.at("backbone").get<std::string>());
        c.window = doc.at("window").get<std::size_t>();
        c.hidden_sizes = doc.at("hidden_sizes").get<std::vector<std::size_t>>();
        c.optimizer = parse_optimizer(doc.at("optimizer").get<std::string>());
        c.learning_rate = doc.at("learning_rate").get<double>();
        c.max_epochs = doc.at("max_epochs").get<std::size_t>();
        c.patience = doc.at("patience").get<std::size_t>();
        c.min_rel_improvement = doc.at("min_rel_improvement").get<double>();
        c.seed = doc.at("seed").get<std::uint64_t>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("predictor config: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

TrainedPredictor::TrainedPredictor(PredictorConfig config, std::size_t n_vars,
                                   std::vector<std::vector<double>> head_params,
                                   std::vector<double> training_means,
                                   std::optional<std::vector<NormRange>> input_norm,
                                   std::vector<double> epoch_losses)
    : config_(std::move(config)), n_vars_(n_vars),
      shape_(n_vars * config_.window, config_.effective_hidden()), heads_(std::move(head_params)),
      means_(std::move(training_means)), input_norm_(std::move(input_norm)),
      epoch_losses_(std::move(epoch_losses)) {
    config_.validate();
    if (n_vars_ < 1) throw Error(ErrorKind::InvalidInput, "predictor needs N >= 1");
    if (heads_.size() != n_vars_ || means_.size() != n_vars_) {
        throw Error(ErrorKind::InvalidInput, "predictor needs one head and one mean per variable");
    }
    if (input_norm_ && input_norm_->size() != n_vars_) {
        throw Error(ErrorKind::InvalidInput, "predictor input_norm size mismatch");
    }
    for (std::size_t j = 0; j < n_vars_; ++j) {
        if (heads_[j].size() != shape_.n_params()) {
            throw Error(ErrorKind::InvalidInput, "head " + std::to_string(j) + " has " +
                                                     std::to_string(heads_[j].size()) +
                                                     " parameters, expected " +
                                                     std::to_string(shape_.n_params()));
        }
        masks_.push_back(build_causal_mask({n_vars_, config_.window, j}));
        // Closed slots carry no weight, whatever the stored parameters say.
        const std::size_t in = shape_.n_inputs();
        const std::size_t out = shape_.layer_sizes()[1];
        const auto flags = masks_.back().flags();
        for (std::size_t o = 0; o < out; ++o) {
            for (std::size_t c = 0; c < in; ++c) {
                if (!flags[c]) heads_[j][shape_.weight_offset(0) + o * in + c] = 0.0;
            }
        }
    }
}

double TrainedPredictor::final_loss() const {
    if (epoch_losses_.empty()) return std::numeric_limits<double>::quiet_NaN();
    return *std::min_element(epoch_losses_.begin(), epoch_losses_.end());
}

double TrainedPredictor::linear_weight(std::size_t dst, std::size_t src, std::size_t lag) const {
    if (config_.backbone != Backbone::Linear) {
        throw Error(ErrorKind::InvalidInput, "linear_weight needs the linear backbone");
    }
    if (dst >= n_vars_ || src >= n_vars_ || lag >= config_.window) {
        throw Error(ErrorKind::InvalidInput, "linear_weight index out of range");
    }
    return heads_[dst][shape_.weight_offset(0) + src * config_.window + lag];
}

void TrainedPredictor::check_series(const MultivariateSeries& series) const {
    if (series.n_vars() != n_vars_) {
        throw Error(ErrorKind::InvalidInput, "series has " + std::to_string(series.n_vars()) +
                                                 " variables, predictor expects " +
                                                 std::to_string(n_vars_));
    }
    if (series.length() <= config_.window) {
        throw Error(ErrorKind::InvalidInput, "series length must exceed the window K=" +
                                                 std::to_string(config_.window));
    }
}

namespace {

PredictionMatrix empty_prediction(std::size_t n, std::size_t len, std::size_t window) {
    PredictionMatrix p;
    p.n_vars = n;
    p.length = len;
    p.valid_from = window - 1;
    p.values.assign(n * len, std::numeric_limits<double>::quiet_NaN());
    return p;
}

} // namespace

PredictionMatrix TrainedPredictor::predict_series(const MultivariateSeries& series) const {
    check_series(series);
    counter_.increment();
    const auto windows = build_windows(series, config_.window);
    auto out = empty_prediction(n_vars_, series.length(), config_.window);
    for (std::size_t j = 0; j < n_vars_; ++j) {
        const auto y = head_forward(shape_, heads_[j], masks_[j].flags(), windows);
        std::copy(y.begin(), y.end(), out.values.begin() + j * out.length + out.valid_from);
    }
    return out;
}

PredictionMatrix TrainedPredictor::predict_with_parents(
    const MultivariateSeries& series, const std::vector<std::vector<std::size_t>>& parents,
    Imputation imputation) const {
    check_series(series);
    if (parents.size() != n_vars_) {
        throw Error(ErrorKind::InvalidInput, "need one parent set per target");
    }
    for (std::size_t j = 0; j < n_vars_; ++j) {
        for (auto p : parents[j]) {
            if (p >= n_vars_) {
                throw Error(ErrorKind::InvalidInput, "parent " + std::to_string(p) + " of target " +
                                                         std::to_string(j) + " out of range");
            }
        }
    }
    counter_.increment();
    const std::size_t K = config_.window;
    const auto windows = build_windows(series, K);
    auto out = empty_prediction(n_vars_, series.length(), K);
    for (std::size_t j = 0; j < n_vars_; ++j) {
        std::vector<bool> keep(n_vars_, false);
        for (auto p : parents[j]) keep[p] = true;
        WindowMatrix masked = windows;
        for (std::size_t i = 0; i < n_vars_; ++i) {
            if (keep[i]) continue;
            const double fill = imputation == Imputation::TrainingMean ? means_[i] : 0.0;
            for (std::size_t r = 0; r < masked.rows; ++r) {
                double* row = masked.data.data() + r * masked.cols + i * K;
                std::fill(row, row + K, fill);
            }
        }
        const auto y = head_forward(shape_, heads_[j], masks_[j].flags(), masked);
        std::copy(y.begin(), y.end(), out.values.begin() + j * out.length + out.valid_from);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;
};

void apply_update(const PredictorConfig& config, std::vector<double>& params,
                  const std::vector<double>& grad, AdamState& state) {
    const double lr = config.learning_rate;
    if (config.optimizer == Optimizer::GradientDescent) {
        kernels::active().axpy(-lr, grad.data(), params.data(), params.size());
        return;
    }
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * grad[k];
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * grad[k] * grad[k];
        params[k] -= lr * (state.m[k] / c1) / (std::sqrt(state.v[k] / c2) + eps);
    }
}

std::vector<double> init_head(const HeadShape& shape, std::span<const std::uint8_t> open,
                              bool linear, Rng& rng) {
    std::vector<double> params(shape.n_params(), 0.0);
    if (!linear) {
        const auto& sizes = shape.layer_sizes();
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
            std::uniform_real_distribution<double> dist(-bound, bound);
            double* w = params.data() + shape.weight_offset(l);
            for (std::size_t k = 0; k < sizes[l + 1] * sizes[l]; ++k) w[k] = dist(rng);
        }
    }
    const std::size_t in = shape.n_inputs();
    for (std::size_t o = 0; o < shape.layer_sizes()[1]; ++o) {
        for (std::size_t c = 0; c < in; ++c) {
            if (!open[c]) params[shape.weight_offset(0) + o * in + c] = 0.0;
        }
    }
    return params;
}

} // namespace

TrainedPredictor train(const MultivariateSeries& series, const PredictorConfig& config) {
    config.validate();
    const std::size_t n = series.n_vars();
    const std::size_t K = config.window;
    if (series.length() <= K) {
        throw Error(ErrorKind::InsufficientData, "series length " + std::to_string(series.length()) +
                                                     " must exceed window K=" + std::to_string(K));
    }
    const auto windows = build_windows(series, K);
    const HeadShape shape(n * K, config.effective_hidden());

    std::vector<CausalMask> masks;
    std::vector<std::vector<double>> targets(n);
    std::vector<std::vector<double>> params(n);
    Rng rng(derive_seed(config.seed, "init"));
    for (std::size_t j = 0; j < n; ++j) {
        masks.push_back(build_causal_mask({n, K, j}));
        const auto row = series.row(j);
        targets[j].assign(row.begin() + static_cast<std::ptrdiff_t>(K - 1), row.end());
        params[j] = init_head(shape, masks[j].flags(), config.backbone == Backbone::Linear, rng);
    }

    std::vector<double> means(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = series.row(i);
        means[i] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
    }

    std::vector<AdamState> adam(n);
    std::vector<std::vector<double>> grads(n, std::vector<double>(shape.n_params()));
    std::vector<double> losses;
    auto best_params = params;
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            total += head_loss(shape, params[j], masks[j].flags(), windows, targets[j], grads[j]);
        }
        const double loss = total / static_cast<double>(n);
        if (!std::isfinite(loss)) {
            throw Error(ErrorKind::Divergence,
                        "non-finite training loss at epoch " + std::to_string(epoch));
        }
        losses.push_back(loss);
        if (loss < best * (1.0 - config.min_rel_improvement)) {
            best = loss;
            best_params = params;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
        for (std::size_t j = 0; j < n; ++j) apply_update(config, params[j], grads[j], adam[j]);
    }

    return TrainedPredictor(config, n, std::move(best_params), std::move(means), series.norm_meta(),
                            std::move(losses));
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const TrainedPredictor& p) {
    nlohmann::json heads = nlohmann::json::array();
    for (std::size_t j = 0; j < p.n_vars(); ++j) {
        const auto params = p.head_params(j);
        heads.push_back(std::vector<double>(params.begin(), params.end()));
    }
    nlohmann::json norm = nullptr;
    if (p.input_norm()) {
        norm = nlohmann::json::array();
        for (const auto& r : *p.input_norm()) norm.push_back({r.min, r.max});
    }
    return {{"format", "causal-insight-predictor"},
            {"version", 1},
            {"config", to_json(p.config())},
            {"n_vars", p.n_vars()},
            {"training_means", p.training_means()},
            {"input_norm", norm},
            {"epoch_losses", p.epoch_losses()},
            {"heads", heads}};
}

TrainedPredictor predictor_from_json(const nlohmann::json& doc) {
    try {
        if (doc.value("format", "") != "causal-insight-predictor") {
            throw Error(ErrorKind::Parse, "not a predictor file");
        }
        if (doc.at("version").get<int>() != 1) {
            throw Error(ErrorKind::Parse, "unsupported predictor version");
        }
        std::optional<std::vector<NormRange>> norm;
        if (!doc.at("input_norm").is_null()) {
            norm.emplace();
            for (const auto& r : doc.at("input_norm")) {
                norm->push_back({r.at(0).get<double>(), r.at(1).get<double>()});
            }
        }
        return TrainedPredictor(predictor_config_from_json(doc.at("config")),
                                doc.at("n_vars").get<std::size_t>(),
                                doc.at("heads").get<std::vector<std::vector<double>>>(),
                                doc.at("training_means").get<std::vector<double>>(), std::move(norm),
                                doc.at("epoch_losses").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("predictor file: ") + e.what());
    }
}

void save_predictor(const TrainedPredictor& predictor, const std::filesystem::path& path) {
    write_text_file(path, to_json(predictor).dump() + "\n");
}

TrainedPredictor load_predictor(const std::filesystem::path& path) {
    try {
        return predictor_from_json(nlohmann::json::parse(read_text_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

} // namespace cinsight
