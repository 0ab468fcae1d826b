#pragma once

#include "cinsight/graph.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include <json.hpp>

namespace cinsight {

struct StructuralReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double tpr = 0.0;
    double fdr = 0.0;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
    std::size_t shd_raw = 0;
    double shd_normalized = 0.0;
    std::optional<double> pod;
    // PoD was vacuous (no true positives to check lags on).
    bool pod_vacuous = false;
};

/// Precision/recall/F1/TPR/FDR over directed ordered pairs, lags ignored.
/// Precision is 0 for an empty prediction.
StructuralReport structural_scores(const TemporalGraph& pred, const TemporalGraph& truth);

/// Hamming distance between directed adjacency matrices, so a reversed edge
/// costs 2.
std::size_t shd(const TemporalGraph& pred, const TemporalGraph& truth);

/// Fraction of true-positive edges whose lag matches exactly; 1.0 when there
/// are no true positives.
double pod(const TemporalGraph& pred, const GroundTruth& truth);

/// Structural scores plus SHD (raw and over max(1, |truth|)) and PoD when the
/// truth carries lags. With `include_self_loops = false` self-loops are
/// dropped from both graphs first.
StructuralReport evaluate_graph(const TemporalGraph& pred, const GroundTruth& truth,
                                bool include_self_loops = true);

nlohmann::json to_json(const StructuralReport& report);

enum class CorrelationKind { Pearson, Spearman };

/// Sample correlation; Spearman is Pearson on average ranks.
double correlation(std::span<const double> xs, std::span<const double> ys, CorrelationKind kind);

} // namespace cinsight
