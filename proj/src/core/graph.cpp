#include "cinsight/graph.hpp"

#include "cinsight/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

namespace cinsight {

namespace {

std::string describe(const LaggedEdge& e) {
    std::ostringstream os;
    os << "(" << e.src << "->" << e.dst << ", lag=" << e.lag << ", score=" << e.score << ")";
    return os.str();
}

} // namespace

TemporalGraph::TemporalGraph(std::size_t n_vars, std::vector<LaggedEdge> edges,
                             Directionality dir)
    : n_vars_(n_vars), edges_(std::move(edges)), dir_(dir) {
    std::vector<std::string> problems;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : edges_) {
        if (e.src >= n_vars_ || e.dst >= n_vars_) {
            problems.push_back(describe(e) + " endpoint out of range");
            continue;
        }
        if (!std::isfinite(e.score) || e.score < 0.0) {
            problems.push_back(describe(e) + " score must be finite and non-negative");
        }
        if (!seen.insert({e.src, e.dst}).second) {
            problems.push_back(describe(e) + " duplicates an ordered pair");
        }
    }
    if (dir_ == Directionality::SingleDominant) {
        for (const auto& e : edges_) {
            if (e.src < e.dst && seen.count({e.dst, e.src}) != 0) {
                problems.push_back(describe(e) + " has its reverse edge too");
            }
        }
    }
    if (!problems.empty()) {
        std::string msg = std::to_string(problems.size()) + " offending edge(s):";
        for (const auto& p : problems) msg += "\n  " + p;
        throw Error(ErrorKind::GraphInvariant, msg);
    }
    std::sort(edges_.begin(), edges_.end(), [](const LaggedEdge& a, const LaggedEdge& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
    });
}

bool TemporalGraph::contains(std::size_t src, std::size_t dst) const {
    return find(src, dst).has_value();
}

std::optional<LaggedEdge> TemporalGraph::find(std::size_t src, std::size_t dst) const {
    for (const auto& e : edges_) {
        if (e.src == src && e.dst == dst) return e;
    }
    return std::nullopt;
}

std::vector<std::size_t> TemporalGraph::parents(std::size_t dst) const {
    std::vector<std::size_t> out;
    for (const auto& e : edges_) {
        if (e.dst == dst) out.push_back(e.src);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::vector<std::size_t>> TemporalGraph::parent_sets() const {
    std::vector<std::vector<std::size_t>> out(n_vars_);
    for (const auto& e : edges_) out[e.dst].push_back(e.src);
    for (auto& p : out) std::sort(p.begin(), p.end());
    return out;
}

TemporalGraph TemporalGraph::without_self_loops() const {
    std::vector<LaggedEdge> kept;
    std::copy_if(edges_.begin(), edges_.end(), std::back_inserter(kept),
                 [](const LaggedEdge& e) { return e.src != e.dst; });
    return TemporalGraph(n_vars_, std::move(kept), dir_);
}

} // namespace cinsight
