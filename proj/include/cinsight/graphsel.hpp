#pragma once

#include "cinsight/graph.hpp"
#include "cinsight/predictor.hpp"
#include "cinsight/probing.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace cinsight {

/// Per-pair peak of the influence signal over the valid time range, and the
/// delay (t - t0) at which the first maximum occurs.
struct PeakSummary {
    std::size_t n_vars = 0;
    std::vector<double> peak;      // N x N, [src * N + dst]
    std::vector<std::size_t> lag;  // N x N

    double peak_at(std::size_t src, std::size_t dst) const { return peak[src * n_vars + dst]; }
    std::size_t lag_at(std::size_t src, std::size_t dst) const { return lag[src * n_vars + dst]; }
};

PeakSummary peak_reduce(const InfluenceTensor& tensor);

/// Eligible candidate edges: every self-loop, and for each unordered pair the
/// direction with the larger peak (smaller source index on ties). Sorted by
/// descending peak, then (src, dst).
std::vector<LaggedEdge> rank_candidates(const PeakSummary& summary);

struct QbicTrace {
    std::vector<std::pair<std::size_t, double>> entries; // (m, Qbic)
    std::size_t selected_m = 0;
    double lambda = 0.4;
    std::size_t n_valid = 0;
};

/// sum_j [ n ln(max(MSE_j, 1e-12)) + lambda k_j ln(n) ]
double qbic_value(std::size_t n_valid, std::span<const double> mse, std::span<const std::size_t> k,
                  double lambda);

struct QbicScore {
    double value = 0.0;
    std::size_t n_valid = 0;
    std::vector<double> mse;
    std::vector<std::size_t> in_degree;
};

/// Scores `graph` with one parent-masked forward pass of the predictor.
QbicScore qbic_score(const TrainedPredictor& predictor, const MultivariateSeries& series,
                     const TemporalGraph& graph, double lambda,
                     Imputation imputation = Imputation::TrainingMean);

/// Smallest m attaining the minimum Qbic of the trace; 0 for an empty trace.
std::size_t conservative_argmin(std::span<const std::pair<std::size_t, double>> entries);

struct SelectionOptions {
    double lambda = 0.4;
    std::size_t m_max = 0;     // 0 means all eligible candidates
    std::size_t patience = 5;  // consecutive non-improving m before stopping
    Imputation imputation = Imputation::TrainingMean;
};

struct Selection {
    TemporalGraph graph;
    QbicTrace trace;
    std::vector<LaggedEdge> candidates;
};

/// The top-m prefix of the ranked candidates as a graph.
TemporalGraph prefix_graph(std::size_t n_vars, std::span<const LaggedEdge> ranked, std::size_t m);

/// Evaluates Qbic(G^(m)) for m = 1, 2, ... and stops once `patience`
/// consecutive m fail to improve the running minimum; returns G^(m_hat) for
/// the smallest m attaining the minimum.
Selection select_graph(const TrainedPredictor& predictor, const MultivariateSeries& series,
                       const InfluenceTensor& tensor, const SelectionOptions& options);

} // namespace cinsight
