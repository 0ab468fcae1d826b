#include "cinsight/metrics.hpp"

#include "cinsight/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace cinsight {

namespace {

void check_same_n(const TemporalGraph& a, const TemporalGraph& b) {
    if (a.n_vars() != b.n_vars()) {
        throw Error(ErrorKind::InvalidInput, "graphs have different variable counts (" +
                                                 std::to_string(a.n_vars()) + " vs " +
                                                 std::to_string(b.n_vars()) + ")");
    }
}

std::vector<bool> adjacency(const TemporalGraph& g) {
    std::vector<bool> adj(g.n_vars() * g.n_vars(), false);
    for (const auto& e : g.edges()) adj[e.src * g.n_vars() + e.dst] = true;
    return adj;
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t k = 0; k < order.size();) {
        std::size_t end = k;
        while (end + 1 < order.size() && xs[order[end + 1]] == xs[order[k]]) ++end;
        const double avg = 0.5 * static_cast<double>(k + end) + 1.0;
        for (std::size_t m = k; m <= end; ++m) ranks[order[m]] = avg;
        k = end + 1;
    }
    return ranks;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double dx = xs[k] - mx;
        const double dy = ys[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error(ErrorKind::UndefinedCorrelation, "constant input");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

} // namespace

StructuralReport structural_scores(const TemporalGraph& pred, const TemporalGraph& truth) {
    check_same_n(pred, truth);
    StructuralReport r;
    for (const auto& e : pred.edges()) {
        if (truth.contains(e.src, e.dst)) {
            ++r.true_positives;
        } else {
            ++r.false_positives;
        }
    }
    r.false_negatives = truth.size() - r.true_positives;
    const double tp = static_cast<double>(r.true_positives);
    r.precision = pred.size() == 0 ? 0.0 : tp / static_cast<double>(pred.size());
    r.recall = truth.size() == 0 ? 0.0 : tp / static_cast<double>(truth.size());
    r.f1 = (r.precision + r.recall) == 0.0
               ? 0.0
               : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    r.tpr = r.recall;
    r.fdr = 1.0 - r.precision;
    return r;
}

std::size_t shd(const TemporalGraph& pred, const TemporalGraph& truth) {
    check_same_n(pred, truth);
    const auto a = adjacency(pred);
    const auto b = adjacency(truth);
    std::size_t d = 0;
    for (std::size_t k = 0; k < a.size(); ++k) d += a[k] != b[k] ? 1 : 0;
    return d;
}

double pod(const TemporalGraph& pred, const GroundTruth& truth) {
    check_same_n(pred, truth.graph);
    if (!truth.has_lags) {
        throw Error(ErrorKind::UnsupportedMetric, "ground truth carries no lags");
    }
    std::size_t matched = 0;
    std::size_t correct = 0;
    for (const auto& e : pred.edges()) {
        if (const auto t = truth.graph.find(e.src, e.dst)) {
            ++matched;
            if (t->lag == e.lag) ++correct;
        }
    }
    return matched == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(matched);
}

StructuralReport evaluate_graph(const TemporalGraph& pred, const GroundTruth& truth,
                                bool include_self_loops) {
    const TemporalGraph p = include_self_loops ? pred : pred.without_self_loops();
    const GroundTruth t{include_self_loops ? truth.graph : truth.graph.without_self_loops(),
                        truth.has_lags};
    auto r = structural_scores(p, t.graph);
    r.shd_raw = shd(p, t.graph);
    r.shd_normalized =
        static_cast<double>(r.shd_raw) / static_cast<double>(std::max<std::size_t>(1, t.graph.size()));
    if (t.has_lags) {
        r.pod = pod(p, t);
        r.pod_vacuous = r.true_positives == 0;
    }
    return r;
}

nlohmann::json to_json(const StructuralReport& r) {
    nlohmann::json j{{"precision", r.precision},
                     {"recall", r.recall},
                     {"f1", r.f1},
                     {"tpr", r.tpr},
                     {"fdr", r.fdr},
                     {"true_positives", r.true_positives},
                     {"false_positives", r.false_positives},
                     {"false_negatives", r.false_negatives},
                     {"shd_raw", r.shd_raw},
                     {"shd_normalized", r.shd_normalized}};
    j["pod"] = r.pod ? nlohmann::json(*r.pod) : nlohmann::json(nullptr);
    j["pod_vacuous"] = r.pod_vacuous;
    return j;
}

double correlation(std::span<const double> xs, std::span<const double> ys, CorrelationKind kind) {
    if (xs.size() != ys.size()) throw Error(ErrorKind::InvalidInput, "correlation lengths differ");
    if (xs.size() < 3) throw Error(ErrorKind::InvalidInput, "correlation needs at least 3 points");
    if (kind == CorrelationKind::Pearson) return pearson(xs, ys);
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    return pearson(rx, ry);
}

} // namespace cinsight
