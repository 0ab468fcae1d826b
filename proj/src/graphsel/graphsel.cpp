#include "cinsight/graphsel.hpp"

#include "cinsight/error.hpp"
#include "cinsight/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cinsight {

namespace {

constexpr double kMseFloor = 1e-12;

} // namespace

PeakSummary peak_reduce(const InfluenceTensor& tensor) {
    const std::size_t n = tensor.n_vars();
    const std::size_t start = std::max(tensor.valid_from(), tensor.t0());
    PeakSummary out;
    out.n_vars = n;
    out.peak.assign(n * n, 0.0);
    out.lag.assign(n * n, start - tensor.t0());
    if (start >= tensor.length()) return out;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto s = tensor.slice(i, j);
            const auto it = std::max_element(s.begin() + static_cast<std::ptrdiff_t>(start), s.end());
            out.peak[i * n + j] = *it;
            out.lag[i * n + j] = static_cast<std::size_t>(it - s.begin()) - tensor.t0();
        }
    }
    return out;
}

std::vector<LaggedEdge> rank_candidates(const PeakSummary& summary) {
    const std::size_t n = summary.n_vars;
    std::vector<LaggedEdge> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({i, i, summary.lag_at(i, i), summary.peak_at(i, i)});
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool forward = summary.peak_at(i, j) >= summary.peak_at(j, i);
            const std::size_t src = forward ? i : j;
            const std::size_t dst = forward ? j : i;
            out.push_back({src, dst, summary.lag_at(src, dst), summary.peak_at(src, dst)});
        }
    }
    std::sort(out.begin(), out.end(), [](const LaggedEdge& a, const LaggedEdge& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
    });
    return out;
}

double qbic_value(std::size_t n_valid, std::span<const double> mse, std::span<const std::size_t> k,
                  double lambda) {
    if (n_valid == 0) throw Error(ErrorKind::InsufficientData, "Qbic needs n > 0 valid points");
    if (mse.size() != k.size()) throw Error(ErrorKind::InvalidInput, "MSE and degree sizes differ");
    const double n = static_cast<double>(n_valid);
    const double log_n = std::log(n);
    double total = 0.0;
    for (std::size_t j = 0; j < mse.size(); ++j) {
        total += n * std::log(std::max(mse[j], kMseFloor)) +
                 lambda * static_cast<double>(k[j]) * log_n;
    }
    return total;
}

QbicScore qbic_score(const TrainedPredictor& predictor, const MultivariateSeries& series,
                     const TemporalGraph& graph, double lambda, Imputation imputation) {
    if (graph.n_vars() != series.n_vars()) {
        throw Error(ErrorKind::InvalidInput, "graph and series disagree on N");
    }
    if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidConfig, "lambda must be > 0");
    const auto parents = graph.parent_sets();
    const auto pred = predictor.predict_with_parents(series, parents, imputation);

    QbicScore score;
    score.n_valid = pred.length - pred.valid_from;
    if (score.n_valid == 0) throw Error(ErrorKind::InsufficientData, "no valid prediction points");
    for (std::size_t j = 0; j < series.n_vars(); ++j) {
        const auto observed = series.row(j).subspan(pred.valid_from);
        score.mse.push_back(kernels::sq_diff_sum(pred.valid_row(j), observed) /
                            static_cast<double>(score.n_valid));
        score.in_degree.push_back(parents[j].size());
    }
    score.value = qbic_value(score.n_valid, score.mse, score.in_degree, lambda);
    return score;
}

std::size_t conservative_argmin(std::span<const std::pair<std::size_t, double>> entries) {
    std::size_t best_m = 0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [m, q] : entries) {
        if (q < best || (q == best && m < best_m)) {
            best = q;
            best_m = m;
        }
    }
    return best_m;
}

TemporalGraph prefix_graph(std::size_t n_vars, std::span<const LaggedEdge> ranked, std::size_t m) {
    m = std::min(m, ranked.size());
    return TemporalGraph(n_vars, std::vector<LaggedEdge>(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(m)));
}

Selection select_graph(const TrainedPredictor& predictor, const MultivariateSeries& series,
                       const InfluenceTensor& tensor, const SelectionOptions& options) {
    if (options.patience < 1) throw Error(ErrorKind::InvalidConfig, "patience must be >= 1");
    if (tensor.n_vars() != series.n_vars()) {
        throw Error(ErrorKind::InvalidInput, "tensor and series disagree on N");
    }
    const std::size_t n = series.n_vars();
    auto ranked = rank_candidates(peak_reduce(tensor));
    Selection sel{TemporalGraph(n), QbicTrace{}, ranked};
    sel.trace.lambda = options.lambda;
    if (options.m_max > ranked.size()) {
        throw Error(ErrorKind::InvalidConfig, "m_max=" + std::to_string(options.m_max) + " exceeds the " +
                                                  std::to_string(ranked.size()) + " eligible candidates");
    }
    if (ranked.empty()) return sel;

    const std::size_t m_max = options.m_max == 0 ? ranked.size() : options.m_max;
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    for (std::size_t m = 1; m <= m_max; ++m) {
        const auto graph = prefix_graph(n, ranked, m);
        const auto score = qbic_score(predictor, series, graph, options.lambda, options.imputation);
        sel.trace.entries.emplace_back(m, score.value);
        sel.trace.n_valid = score.n_valid;
        if (score.value < best) {
            best = score.value;
            since_best = 0;
        } else if (++since_best >= options.patience) {
            break;
        }
    }
    sel.trace.selected_m = conservative_argmin(sel.trace.entries);
    sel.graph = prefix_graph(n, ranked, sel.trace.selected_m);
    return sel;
}

} // namespace cinsight
