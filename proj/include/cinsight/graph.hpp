#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace cinsight {

struct LaggedEdge {
    std::size_t src = 0;
    std::size_t dst = 0;
    std::size_t lag = 0;
    double score = 0.0;
    bool operator==(const LaggedEdge&) const = default;
};

// Predicted graphs keep one direction per unordered pair. Ground-truth
// graphs (e.g. Lorenz-96 neighbours) may need both.
enum class Directionality { SingleDominant, AllowBoth };

/// Directed lagged graph over `n_vars` nodes. Self-loops and cycles allowed;
/// at most one edge per ordered pair. Edges are kept in canonical order:
/// descending score, then (src, dst).
class TemporalGraph {
public:
    explicit TemporalGraph(std::size_t n_vars, std::vector<LaggedEdge> edges = {},
                           Directionality dir = Directionality::SingleDominant);

    std::size_t n_vars() const noexcept { return n_vars_; }
    const std::vector<LaggedEdge>& edges() const noexcept { return edges_; }
    std::size_t size() const noexcept { return edges_.size(); }
    Directionality directionality() const noexcept { return dir_; }

    bool contains(std::size_t src, std::size_t dst) const;
    std::optional<LaggedEdge> find(std::size_t src, std::size_t dst) const;

    /// Pa(j) as sorted variable indices.
    std::vector<std::size_t> parents(std::size_t dst) const;
    /// Pa(j) for every j.
    std::vector<std::vector<std::size_t>> parent_sets() const;

    TemporalGraph without_self_loops() const;

    bool operator==(const TemporalGraph&) const = default;

private:
    std::size_t n_vars_;
    std::vector<LaggedEdge> edges_;
    Directionality dir_;
};

/// Ground-truth graph plus whether its lags are meaningful for PoD.
struct GroundTruth {
    TemporalGraph graph;
    bool has_lags = true;
};

} // namespace cinsight
