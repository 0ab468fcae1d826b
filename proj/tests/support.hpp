#pragma once

#include "cinsight/graph.hpp"
#include "cinsight/predictor.hpp"
#include "cinsight/rng.hpp"
#include "cinsight/series.hpp"

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace cinsight::testing {

inline MultivariateSeries random_series(std::size_t n, std::size_t len, Rng& rng, double lo = 0.0,
                                        double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n * len);
    for (auto& x : v) x = u(rng);
    return MultivariateSeries(n, len, std::move(v));
}

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Random graph satisfying the single-direction rule.
inline TemporalGraph random_graph(std::size_t n, Rng& rng, double density = 0.4, std::size_t max_lag = 3) {
    std::bernoulli_distribution keep(density);
    std::bernoulli_distribution flip(0.5);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    std::vector<LaggedEdge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        if (keep(rng)) edges.push_back({i, i, uniform_index(rng, 0, max_lag), score(rng)});
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!keep(rng)) continue;
            const bool fwd = flip(rng);
            edges.push_back({fwd ? i : j, fwd ? j : i, uniform_index(rng, 0, max_lag), score(rng)});
        }
    }
    return TemporalGraph(n, std::move(edges));
}

// Linear predictor with explicit weights: w[dst][src * window + lag], bias[dst].
inline TrainedPredictor linear_predictor(std::size_t n, std::size_t window,
                                         const std::vector<std::vector<double>>& weights,
                                         const std::vector<double>& bias,
                                         std::vector<double> means = {}) {
    PredictorConfig c;
    c.backbone = Backbone::Linear;
    c.window = window;
    std::vector<std::vector<double>> heads;
    for (std::size_t j = 0; j < n; ++j) {
        auto p = weights[j];
        p.push_back(bias[j]);
        heads.push_back(std::move(p));
    }
    if (means.empty()) means.assign(n, 0.5);
    return TrainedPredictor(c, n, std::move(heads), std::move(means));
}

// Small MLP predictor with random parameters, for structural properties
// that must hold for any weights.
inline TrainedPredictor random_mlp(std::size_t n, std::size_t window, std::size_t hidden, Rng& rng) {
    PredictorConfig c;
    c.backbone = Backbone::MLP;
    c.window = window;
    c.hidden_sizes = {hidden};
    const HeadShape shape(n * window, {hidden});
    std::normal_distribution<double> g(0.0, 0.7);
    std::vector<std::vector<double>> heads(n, std::vector<double>(shape.n_params()));
    for (auto& h : heads) {
        for (auto& p : h) p = g(rng);
    }
    std::vector<double> means(n, 0.5);
    return TrainedPredictor(c, n, std::move(heads), std::move(means));
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

} // namespace cinsight::testing
