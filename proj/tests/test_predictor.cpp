#include "cinsight/datagen.hpp"
#include "cinsight/error.hpp"
#include "cinsight/predictor.hpp"

#include "support.hpp"

#include <Eigen/Dense>
#include <filesystem>
#include <gtest/gtest.h>

using namespace cinsight;
using namespace cinsight::testing;

TEST(CausalMask, OnlyTargetLagZeroClosed) {
    const auto m = build_causal_mask({3, 2, 0});
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t lag = 0; lag < 2; ++lag) EXPECT_EQ(m.open(i, lag), !(i == 0 && lag == 0));
    }
}

TEST(CausalMask, SingleVariable) {
    const auto m = build_causal_mask({1, 3, 0});
    EXPECT_FALSE(m.open(0, 0));
    EXPECT_TRUE(m.open(0, 1));
    EXPECT_TRUE(m.open(0, 2));
}

TEST(CausalMask, OpenCountIsNKMinusOne) {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = uniform_index(rng, 1, 8);
        const std::size_t k = uniform_index(rng, 2, 7);
        const std::size_t j = uniform_index(rng, 0, n - 1);
        EXPECT_EQ(build_causal_mask({n, k, j}).open_count(), n * k - 1);
    }
}

TEST(Windows, LayoutMatchesSeries) {
    Rng rng(2);
    const auto s = random_series(2, 6, rng);
    const auto w = build_windows(s, 3);
    EXPECT_EQ(w.rows, 4u);
    EXPECT_EQ(w.cols, 6u);
    EXPECT_EQ(w.first_t, 2u);
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t lag = 0; lag < 3; ++lag) EXPECT_EQ(w.row(r)[i * 3 + lag], s(i, r + 2 - lag));
        }
    }
}

namespace {

void gradient_check(const std::vector<std::size_t>& hidden, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = 3, k = 3;
    const auto s = random_series(n, 25, rng);
    const auto windows = build_windows(s, k);
    const HeadShape shape(n * k, hidden);
    std::normal_distribution<double> g(0.0, 0.5);
    for (std::size_t target = 0; target < n; ++target) {
        const auto mask = build_causal_mask({n, k, target});
        std::vector<double> targets;
        for (std::size_t r = 0; r < windows.rows; ++r) targets.push_back(s(target, windows.first_t + r));
        std::vector<double> params(shape.n_params());
        for (auto& p : params) p = g(rng);
        std::vector<double> grad(params.size());
        head_loss(shape, params, mask.flags(), windows, targets, grad);
        const double h = 1e-5;
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto plus = params;
            auto minus = params;
            plus[p] += h;
            minus[p] -= h;
            const double fd = (head_loss(shape, plus, mask.flags(), windows, targets, {}) -
                               head_loss(shape, minus, mask.flags(), windows, targets, {})) /
                              (2 * h);
            // Closed input slots contribute nothing, so their gradient is zero.
            const double err = std::abs(grad[p] - fd) / std::max({std::abs(grad[p]), std::abs(fd), 1e-6});
            EXPECT_LE(err, 1e-4) << "param " << p << " analytic " << grad[p] << " fd " << fd;
        }
    }
}

} // namespace

TEST(Gradient, LinearHeadMatchesCentralDifferences) { gradient_check({}, 3); }
TEST(Gradient, MlpHeadMatchesCentralDifferences) { gradient_check({4}, 4); }
TEST(Gradient, TwoHiddenLayersMatchCentralDifferences) { gradient_check({5, 3}, 5); }

TEST(Gradient, ClosedSlotsHaveZeroGradient) {
    Rng rng(6);
    const auto s = random_series(2, 12, rng);
    const auto w = build_windows(s, 2);
    const HeadShape shape(4, {3});
    const auto mask = build_causal_mask({2, 2, 1});
    std::vector<double> targets;
    for (std::size_t r = 0; r < w.rows; ++r) targets.push_back(s(1, w.first_t + r));
    std::vector<double> params(shape.n_params(), 0.3);
    std::vector<double> grad(params.size());
    head_loss(shape, params, mask.flags(), w, targets, grad);
    for (std::size_t o = 0; o < 3; ++o) EXPECT_EQ(grad[shape.weight_offset(0) + o * 4 + 1 * 2 + 0], 0.0);
}

TEST(Predict, HandBuiltLinearHead) {
    // head 0: 0.5 x0[t-1] + 2 x1[t] - 1 x1[t-1] + 0.25; head 1: x0[t] + 0.1
    const MultivariateSeries s(2, 5, {0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 0.0, 1.0, 0.5, 0.25});
    const auto p = linear_predictor(2, 2, {{7.0, 0.5, 2.0, -1.0}, {1.0, 0.0, 9.0, 0.0}}, {0.25, 0.1});
    const auto y = p.predict_series(s);
    EXPECT_EQ(y.valid_from, 1u);
    EXPECT_TRUE(std::isnan(y(0, 0)));
    for (std::size_t t = 1; t < 5; ++t) {
        EXPECT_NEAR(y(0, t), 0.5 * s(0, t - 1) + 2.0 * s(1, t) - 1.0 * s(1, t - 1) + 0.25, 1e-15);
        EXPECT_NEAR(y(1, t), s(0, t) + 0.1, 1e-15);
    }
    // The stored weight on a closed slot is ignored.
    EXPECT_EQ(p.linear_weight(0, 0, 0), 0.0);
}

TEST(Predict, PureFunctionOfFrozenParameters) {
    Rng rng(7);
    const auto p = random_mlp(3, 3, 5, rng);
    const auto s = random_series(3, 30, rng);
    const auto a = p.predict_series(s);
    const auto b = p.predict_series(s);
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        if (std::isnan(a.values[k])) {
            EXPECT_TRUE(std::isnan(b.values[k]));
        } else {
            EXPECT_EQ(a.values[k], b.values[k]);
        }
    }
    EXPECT_EQ(p.forward_passes(), 2u);
}

TEST(Predict, ShapeMismatchRejected) {
    Rng rng(8);
    const auto p = random_mlp(3, 3, 4, rng);
    EXPECT_THROW(p.predict_series(random_series(2, 20, rng)), Error);
    EXPECT_THROW(p.predict_series(random_series(3, 3, rng)), Error);
}

// Perturbing X_{j,t} must not move X^_{j,t}, and perturbing anything after
// t must not move any X^_{.,t}.
TEST(NoLeakage, RandomPerturbationTrials) {
    Rng rng(9);
    std::size_t self_violations = 0;
    std::size_t future_violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = uniform_index(rng, 1, 4);
        const std::size_t k = uniform_index(rng, 2, 4);
        const std::size_t len = uniform_index(rng, k + 2, 20);
        const auto p = trial % 2 ? random_mlp(n, k, 4, rng)
                                 : random_mlp(n, k, uniform_index(rng, 1, 6), rng);
        const auto s = random_series(n, len, rng);
        const auto base = p.predict_series(s);
        const std::size_t j = uniform_index(rng, 0, n - 1);
        const std::size_t t = uniform_index(rng, k - 1, len - 1);
        const auto self = p.predict_series(s.with_value(j, t, s(j, t) + 0.7));
        if (self(j, t) != base(j, t)) ++self_violations;

        if (t + 1 < len) {
            const std::size_t i = uniform_index(rng, 0, n - 1);
            const std::size_t later = uniform_index(rng, t + 1, len - 1);
            const auto fut = p.predict_series(s.with_value(i, later, s(i, later) - 0.9));
            for (std::size_t dst = 0; dst < n; ++dst) {
                if (fut(dst, t) != base(dst, t)) ++future_violations;
            }
        }
    }
    EXPECT_EQ(self_violations, 0u);
    EXPECT_EQ(future_violations, 0u);
}

TEST(PredictWithParents, AllParentsEqualsPlainPrediction) {
    Rng rng(10);
    const auto p = random_mlp(3, 3, 4, rng);
    const auto s = random_series(3, 25, rng);
    const std::vector<std::vector<std::size_t>> all(3, {0, 1, 2});
    const auto a = p.predict_with_parents(s, all);
    const auto b = p.predict_series(s);
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t t = 2; t < 25; ++t) EXPECT_EQ(a(j, t), b(j, t));
    }
}

TEST(PredictWithParents, EmptyParentSetGivesConstant) {
    Rng rng(11);
    const auto p = random_mlp(3, 3, 4, rng);
    const auto s = random_series(3, 25, rng);
    const auto y = p.predict_with_parents(s, {{}, {}, {}});
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t t = 3; t < 25; ++t) EXPECT_EQ(y(j, t), y(j, 2));
    }
}

TEST(PredictWithParents, ImputesTrainingMeanOrZero) {
    // head 0 = 2 x1[t] ; masking x1 leaves 2 * mean(x1) or 0.
    const auto p = linear_predictor(2, 2, {{0, 0, 2.0, 0}, {0, 0, 0, 0}}, {0, 0}, {0.5, 0.3});
    const MultivariateSeries s(2, 4, {0.1, 0.2, 0.3, 0.4, 0.9, 0.8, 0.7, 0.6});
    EXPECT_DOUBLE_EQ(p.predict_with_parents(s, {{}, {}})(0, 2), 0.6);
    EXPECT_DOUBLE_EQ(p.predict_with_parents(s, {{}, {}}, Imputation::Zero)(0, 2), 0.0);
    EXPECT_DOUBLE_EQ(p.predict_with_parents(s, {{1}, {}})(0, 2), 1.4);
    EXPECT_THROW(p.predict_with_parents(s, {{2}, {}}), Error);
    EXPECT_THROW(p.predict_with_parents(s, {{1}}), Error);
}

namespace {

struct VarFixture {
    GeneratedData data;
    MultivariateSeries series;
    TrainedPredictor predictor;
};

VarFixture trained_linear_var(std::uint64_t seed) {
    RandomVarConfig rc;
    rc.n_vars = 4;
    rc.n_cross_edges = 3;
    rc.seed = seed;
    auto data = gen_linear_var(random_sparse_var(rc), 2000, 0.05, seed);
    auto series = normalize_minmax(data.series);
    PredictorConfig pc;
    pc.backbone = Backbone::Linear;
    pc.window = 5;
    pc.seed = seed;
    auto predictor = train(series, pc);
    return {std::move(data), std::move(series), std::move(predictor)};
}

} // namespace

TEST(TrainLinear, MatchesOlsOracleAndGeneratingCoefficients) {
    const auto f = trained_linear_var(3);
    const std::size_t n = 4, k = 5;
    const auto w = build_windows(f.series, k);
    const auto& A = *f.data.coefficients;
    const auto& norm = *f.series.norm_meta();
    for (std::size_t j = 0; j < n; ++j) {
        const auto mask = build_causal_mask({n, k, j});
        std::vector<std::size_t> open;
        for (std::size_t c = 0; c < n * k; ++c) {
            if (mask.flags()[c]) open.push_back(c);
        }
        Eigen::MatrixXd X(w.rows, open.size() + 1);
        Eigen::VectorXd y(w.rows);
        for (std::size_t r = 0; r < w.rows; ++r) {
            for (std::size_t c = 0; c < open.size(); ++c) X(r, c) = w.row(r)[open[c]];
            X(r, open.size()) = 1.0;
            y(r) = f.series(j, w.first_t + r);
        }
        const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
        double max_dev_true = 0.0;
        for (std::size_t c = 0; c < open.size(); ++c) {
            const std::size_t src = open[c] / k;
            const std::size_t lag = open[c] % k;
            const double learned = f.predictor.linear_weight(j, src, lag);
            EXPECT_NEAR(learned, beta(c), 0.1) << "head " << j << " slot " << open[c];
            // True coefficient expressed in normalized units.
            const double scale = (norm[src].max - norm[src].min) / (norm[j].max - norm[j].min);
            const double truth = lag >= 1 && lag <= A.max_lag() ? A.at(lag, src, j) * scale : 0.0;
            max_dev_true = std::max(max_dev_true, std::abs(learned - truth));
        }
        EXPECT_LT(max_dev_true, 0.1) << "head " << j;
    }
}

TEST(TrainLinear, PredictionMseNotAboveTrainingLoss) {
    const auto f = trained_linear_var(4);
    const auto y = f.predictor.predict_series(f.series);
    double total = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        const auto row = y.valid_row(j);
        double se = 0.0;
        for (std::size_t r = 0; r < row.size(); ++r) {
            const double d = row[r] - f.series(j, y.valid_from + r);
            se += d * d;
        }
        total += se / static_cast<double>(row.size());
    }
    EXPECT_LE(total / 4.0, f.predictor.final_loss() + 1e-9);
}

TEST(TrainLinear, MaskingOnlyParentIncreasesMse) {
    VarCoefficients A(2, 1);
    A.at(1, 0, 1) = 0.9;
    const auto d = gen_linear_var(A, 1500, 0.1, 5);
    const auto s = normalize_minmax(d.series);
    PredictorConfig pc;
    pc.backbone = Backbone::Linear;
    pc.window = 2;
    const auto p = train(s, pc);
    auto mse = [&](const PredictionMatrix& m) {
        double se = 0.0;
        const auto row = m.valid_row(1);
        for (std::size_t r = 0; r < row.size(); ++r) se += std::pow(row[r] - s(1, m.valid_from + r), 2);
        return se / static_cast<double>(row.size());
    };
    const double with_parent = mse(p.predict_with_parents(s, {{0}, {0}}));
    const double without = mse(p.predict_with_parents(s, {{0}, {}}));
    EXPECT_GT(without, with_parent * 1.5);
}

TEST(Train, PureNoiseLossNearTargetVariance) {
    Rng rng(12);
    const auto s = normalize_minmax(random_series(2, 1500, rng));
    PredictorConfig pc;
    pc.backbone = Backbone::Linear;
    pc.window = 3;
    const auto p = train(s, pc);
    double var = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
        const auto row = s.row(j).subspan(2);
        double m = 0.0;
        for (double v : row) m += v;
        m /= static_cast<double>(row.size());
        for (double v : row) var += (v - m) * (v - m) / static_cast<double>(row.size());
    }
    var /= 2.0;
    EXPECT_NEAR(p.final_loss(), var, 0.03 * var);
}

TEST(Train, DeterministicGivenSeed) {
    Rng rng(13);
    const auto s = normalize_minmax(random_series(3, 80, rng));
    PredictorConfig pc;
    pc.hidden_sizes = {6};
    pc.max_epochs = 50;
    pc.seed = 99;
    const auto a = train(s, pc);
    const auto b = train(s, pc);
    for (std::size_t j = 0; j < 3; ++j) {
        const auto pa = a.head_params(j);
        const auto pb = b.head_params(j);
        EXPECT_TRUE(std::equal(pa.begin(), pa.end(), pb.begin(), pb.end()));
    }
}

TEST(Train, InsufficientDataAndDivergence) {
    Rng rng(14);
    PredictorConfig pc;
    pc.window = 5;
    try {
        train(normalize_minmax(random_series(2, 5, rng)), pc);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
    pc.backbone = Backbone::Linear;
    pc.optimizer = Optimizer::GradientDescent;
    pc.learning_rate = 1e6;
    pc.max_epochs = 200;
    pc.patience = 200;
    try {
        train(normalize_minmax(random_series(2, 50, rng)), pc);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Divergence);
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(PredictorConfig, Validation) {
    PredictorConfig pc;
    pc.window = 1;
    EXPECT_THROW(pc.validate(), Error);
    pc = {};
    pc.max_epochs = 0;
    EXPECT_THROW(pc.validate(), Error);
    pc = {};
    pc.patience = 0;
    EXPECT_THROW(pc.validate(), Error);
    EXPECT_THROW(parse_backbone("cnn"), Error);
}

TEST(PredictorJson, RoundTripPreservesPredictions) {
    Rng rng(15);
    const auto s = normalize_minmax(random_series(3, 60, rng));
    PredictorConfig pc;
    pc.hidden_sizes = {5};
    pc.max_epochs = 20;
    const auto p = train(s, pc);
    const auto path = std::filesystem::temp_directory_path() / "cinsight_test_predictor.json";
    save_predictor(p, path);
    const auto q = load_predictor(path);
    const auto a = p.predict_series(s);
    const auto b = q.predict_series(s);
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t t = a.valid_from; t < 60; ++t) EXPECT_EQ(a(j, t), b(j, t));
    }
    EXPECT_EQ(q.training_means(), p.training_means());
    EXPECT_EQ(q.input_norm(), p.input_norm());
    EXPECT_EQ(q.epoch_losses(), p.epoch_losses());
}
