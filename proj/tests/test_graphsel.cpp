#include "cinsight/datagen.hpp"
#include "cinsight/error.hpp"
#include "cinsight/graphsel.hpp"
#include "cinsight/io.hpp"
#include "cinsight/metrics.hpp"

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <gtest/gtest.h>

using namespace cinsight;
using namespace cinsight::testing;

namespace {

InfluenceTensor single_slice(std::vector<double> slice, std::size_t valid_from, std::size_t t0) {
    const std::size_t len = slice.size();
    std::vector<double> v(2 * 2 * len, 0.0);
    std::copy(slice.begin(), slice.end(), v.begin() + static_cast<std::ptrdiff_t>((0 * 2 + 1) * len));
    return InfluenceTensor(2, len, valid_from, t0, std::move(v));
}

PeakSummary summary(std::size_t n, std::vector<double> peak) {
    PeakSummary s;
    s.n_vars = n;
    s.peak = std::move(peak);
    s.lag.assign(n * n, 1);
    return s;
}

} // namespace

TEST(PeakReduce, MaxAndDelay) {
    const auto s = peak_reduce(single_slice({0, 0.1, 0.5, 0.2}, 1, 0));
    EXPECT_EQ(s.peak_at(0, 1), 0.5);
    EXPECT_EQ(s.lag_at(0, 1), 2u);
}

TEST(PeakReduce, ZeroSliceTakesFirstValidIndex) {
    const auto s = peak_reduce(single_slice({0, 0, 0, 0}, 1, 0));
    EXPECT_EQ(s.peak_at(1, 0), 0.0);
    EXPECT_EQ(s.lag_at(1, 0), 1u);
}

TEST(PeakReduce, TieTakesFirstOccurrence) {
    const auto s = peak_reduce(single_slice({0, 0.3, 0.3}, 1, 0));
    EXPECT_EQ(s.lag_at(0, 1), 1u);
}

TEST(PeakReduce, DelayMeasuredFromClampIndex) {
    const auto s = peak_reduce(single_slice({0, 0, 0.1, 0.2, 0.9, 0.3}, 2, 2));
    EXPECT_EQ(s.peak_at(0, 1), 0.9);
    EXPECT_EQ(s.lag_at(0, 1), 2u);
}

TEST(RankCandidates, LargerDirectionWins) {
    const auto c = rank_candidates(summary(2, {0.0, 0.9, 0.4, 0.0}));
    const bool has_reverse = std::any_of(c.begin(), c.end(), [](const auto& e) { return e.src == 1 && e.dst == 0; });
    EXPECT_FALSE(has_reverse);
    EXPECT_EQ(c.front().src, 0u);
    EXPECT_EQ(c.front().dst, 1u);
}

TEST(RankCandidates, TieGoesToSmallerSource) {
    const auto c = rank_candidates(summary(2, {0.0, 0.4, 0.4, 0.0}));
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c.front().src, 0u);
    EXPECT_EQ(c.front().dst, 1u);
}

TEST(RankCandidates, SortedByPeakWithSelfLoops) {
    const auto c = rank_candidates(summary(2, {0.8, 0.9, 0.4, 0.7}));
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[0], (LaggedEdge{0, 1, 1, 0.9}));
    EXPECT_EQ(c[1], (LaggedEdge{0, 0, 1, 0.8}));
    EXPECT_EQ(c[2], (LaggedEdge{1, 1, 1, 0.7}));
}

TEST(RankCandidates, OnePerPairOnRandomSummaries) {
    Rng rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = uniform_index(rng, 1, 7);
        std::vector<double> peak(n * n);
        for (auto& p : peak) p = std::round(u(rng) * 4) / 4; // coarse values force ties
        const auto c = rank_candidates(summary(n, peak));
        EXPECT_EQ(c.size(), n + n * (n - 1) / 2);
        EXPECT_NO_THROW(TemporalGraph(n, c));
        for (std::size_t k = 1; k < c.size(); ++k) {
            const bool ordered = c[k - 1].score > c[k].score ||
                                 (c[k - 1].score == c[k].score &&
                                  std::pair(c[k - 1].src, c[k - 1].dst) < std::pair(c[k].src, c[k].dst));
            EXPECT_TRUE(ordered);
        }
    }
}

TEST(QbicValue, HandEvaluation) {
    const std::vector<double> mse{0.01, 0.04};
    const std::vector<std::size_t> k{1, 2};
    // 100 ln 0.01 + 0.4 ln 100 + 100 ln 0.04 + 0.8 ln 100
    const double expected = -460.51701859880916 + 1.8420680743952367 - 321.88758248682007 + 3.6841361487904734;
    EXPECT_NEAR(qbic_value(100, mse, k, 0.4), expected, 1e-9);
    EXPECT_NEAR(qbic_value(100, mse, k, 0.4), -776.88, 5e-3);
}

TEST(QbicValue, MseFloor) {
    const std::vector<double> zero{0.0};
    const std::vector<std::size_t> k{0};
    EXPECT_DOUBLE_EQ(qbic_value(10, zero, k, 0.4), 10 * std::log(1e-12));
}

TEST(QbicScore, EmptyGraphHasNoPenalty) {
    Rng rng(2);
    const auto p = random_mlp(3, 3, 4, rng);
    const auto s = random_series(3, 40, rng);
    const auto q = qbic_score(p, s, TemporalGraph(3, {}), 0.4);
    EXPECT_EQ(q.n_valid, 38u);
    double expected = 0.0;
    for (double m : q.mse) expected += 38 * std::log(m);
    EXPECT_NEAR(q.value, expected, 1e-9);
}

TEST(QbicScore, UselessParentAddsExactPenalty) {
    // Head 0 reads only x1, so adding the self-loop 0->0 leaves every MSE unchanged.
    std::vector<std::vector<double>> w(2, std::vector<double>(4, 0.0));
    w[0][1 * 2 + 1] = 0.7;
    const auto p = linear_predictor(2, 2, w, {0.1, 0.2});
    Rng rng(3);
    const auto s = random_series(2, 50, rng);
    const TemporalGraph base(2, {{1, 0, 1, 1.0}});
    const TemporalGraph more(2, {{1, 0, 1, 1.0}, {0, 0, 1, 0.5}});
    const auto a = qbic_score(p, s, base, 0.4);
    const auto b = qbic_score(p, s, more, 0.4);
    EXPECT_EQ(a.mse, b.mse);
    EXPECT_NEAR(b.value - a.value, 0.4 * std::log(49.0), 1e-9);
}

TEST(QbicScore, InvariantUnderEdgeOrder) {
    Rng rng(4);
    const auto p = random_mlp(4, 3, 5, rng);
    const auto s = random_series(4, 30, rng);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = random_graph(4, rng, 0.5, 2);
        auto edges = std::vector<LaggedEdge>(g.edges().begin(), g.edges().end());
        std::shuffle(edges.begin(), edges.end(), rng);
        EXPECT_EQ(qbic_score(p, s, g, 0.4).value, qbic_score(p, s, TemporalGraph(4, edges), 0.4).value);
    }
}

TEST(QbicScore, OneForwardPassPerScore) {
    Rng rng(5);
    const auto p = random_mlp(3, 2, 4, rng);
    const auto s = random_series(3, 20, rng);
    p.reset_forward_passes();
    qbic_score(p, s, random_graph(3, rng), 0.4);
    EXPECT_EQ(p.forward_passes(), 1u);
}

TEST(ConservativeArgmin, SmallestMinimiser) {
    const std::vector<std::pair<std::size_t, double>> t{{1, -10}, {2, -12}, {3, -12}, {4, -11}};
    EXPECT_EQ(conservative_argmin(t), 2u);
    const std::vector<std::pair<std::size_t, double>> inc{{1, 1}, {2, 2}, {3, 3}};
    EXPECT_EQ(conservative_argmin(inc), 1u);
    EXPECT_EQ(conservative_argmin({}), 0u);
}

namespace {

struct Fixture {
    GeneratedData data;
    MultivariateSeries series;
    TrainedPredictor predictor;
    InfluenceTensor tensor;
};

Fixture var_fixture(std::uint64_t seed, std::size_t n, std::size_t edges) {
    RandomVarConfig rc;
    rc.n_vars = n;
    rc.n_cross_edges = edges;
    rc.seed = seed;
    auto data = gen_linear_var(random_sparse_var(rc), 2000, 0.05, seed + 100);
    auto series = normalize_minmax(data.series);
    PredictorConfig pc;
    pc.backbone = Backbone::Linear;
    pc.seed = seed;
    auto predictor = train(series, pc);
    auto tensor = influence_tensor(predictor, series, {}).tensor;
    return {std::move(data), std::move(series), std::move(predictor), std::move(tensor)};
}

} // namespace

TEST(SelectGraph, EarlyStopAgainstExhaustiveTrace) {
    const auto f = var_fixture(7, 4, 3);
    SelectionOptions all;
    all.patience = 1000;
    const auto full = select_graph(f.predictor, f.series, f.tensor, all);
    EXPECT_EQ(full.trace.entries.size(), full.candidates.size());
    EXPECT_EQ(full.trace.selected_m, conservative_argmin(full.trace.entries));

    for (std::size_t patience = 1; patience <= 6; ++patience) {
        SelectionOptions o;
        o.patience = patience;
        f.predictor.reset_forward_passes();
        const auto sel = select_graph(f.predictor, f.series, f.tensor, o);
        EXPECT_EQ(f.predictor.forward_passes(), sel.trace.entries.size());
        // Trace is a contiguous prefix of the exhaustive one.
        ASSERT_LE(sel.trace.entries.size(), full.trace.entries.size());
        for (std::size_t k = 0; k < sel.trace.entries.size(); ++k) {
            EXPECT_EQ(sel.trace.entries[k].first, k + 1);
            EXPECT_EQ(sel.trace.entries[k].second, full.trace.entries[k].second);
        }
        const double chosen = sel.trace.entries[sel.trace.selected_m - 1].second;
        for (const auto& [m, q] : sel.trace.entries) EXPECT_LE(chosen, q);
        EXPECT_EQ(sel.graph, prefix_graph(4, sel.candidates, sel.trace.selected_m));
    }
}

// Every true edge is kept and the early-stopped choice agrees with the
// exhaustive trace. Spurious low-peak edges can still enter: masking a
// null variable without refitting costs about chi2_K in n ln MSE, which
// typically exceeds the lambda ln n penalty.
TEST(SelectGraph, StrongLinearVarKeepsTrueEdgesAndMatchesExhaustive) {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        SCOPED_TRACE(seed);
        const auto f = var_fixture(seed, 4, 3);
        const auto sel = select_graph(f.predictor, f.series, f.tensor, {});
        SelectionOptions all;
        all.patience = 1000;
        const auto full = select_graph(f.predictor, f.series, f.tensor, all);
        EXPECT_EQ(sel.graph, full.graph);
        for (const auto& e : f.data.truth.graph.edges()) {
            EXPECT_TRUE(sel.graph.contains(e.src, e.dst)) << e.src << "->" << e.dst;
        }
        const auto report = evaluate_graph(sel.graph, f.data.truth);
        ASSERT_TRUE(report.pod);
        EXPECT_EQ(*report.pod, 1.0);
    }
}

TEST(SelectGraph, StrongLinearVarExactRecovery) {
    const auto f = var_fixture(1, 4, 3);
    const auto sel = select_graph(f.predictor, f.series, f.tensor, {});
    EXPECT_EQ(sel.graph.size(), f.data.truth.graph.size()) << "selected " << graph_to_json(sel.graph).dump();
    for (const auto& e : f.data.truth.graph.edges()) {
        const auto got = sel.graph.find(e.src, e.dst);
        ASSERT_TRUE(got.has_value()) << e.src << "->" << e.dst;
        EXPECT_EQ(got->lag, e.lag);
    }
}

TEST(SelectGraph, MaxCandidatesCapsTrace) {
    const auto f = var_fixture(3, 3, 2);
    SelectionOptions o;
    o.m_max = 2;
    o.patience = 10;
    const auto sel = select_graph(f.predictor, f.series, f.tensor, o);
    EXPECT_EQ(sel.trace.entries.size(), 2u);
    EXPECT_LE(sel.graph.size(), 2u);
}

TEST(SelectGraph, InvalidOptionsRejected) {
    const auto f = var_fixture(3, 3, 2);
    SelectionOptions o;
    o.lambda = 0.0;
    EXPECT_THROW(select_graph(f.predictor, f.series, f.tensor, o), Error);
    o = {};
    o.patience = 0;
    EXPECT_THROW(select_graph(f.predictor, f.series, f.tensor, o), Error);
    o = {};
    o.m_max = 100;
    EXPECT_THROW(select_graph(f.predictor, f.series, f.tensor, o), Error);
}
