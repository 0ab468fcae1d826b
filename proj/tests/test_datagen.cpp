#include "cinsight/datagen.hpp"
#include "cinsight/error.hpp"

#include "support.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

using namespace cinsight;
using namespace cinsight::testing;

namespace {

// OLS of x_dst,t on every variable at lags 1..L (plus intercept); returns
// coefficients beta[(lag-1) * N + src] and their standard errors.
struct OlsFit {
    std::vector<double> beta;
    std::vector<double> se;
};

OlsFit ols_on_lags(const MultivariateSeries& s, std::size_t dst, std::size_t max_lag) {
    const std::size_t n = s.n_vars();
    const std::size_t rows = s.length() - max_lag;
    const std::size_t cols = n * max_lag + 1;
    Eigen::MatrixXd X(rows, cols);
    Eigen::VectorXd y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + max_lag;
        for (std::size_t lag = 1; lag <= max_lag; ++lag) {
            for (std::size_t src = 0; src < n; ++src) X(r, (lag - 1) * n + src) = s(src, t - lag);
        }
        X(r, cols - 1) = 1.0;
        y(r) = s(dst, t);
    }
    const Eigen::VectorXd b = X.colPivHouseholderQr().solve(y);
    const Eigen::VectorXd resid = y - X * b;
    const double sigma2 = resid.squaredNorm() / static_cast<double>(rows - cols);
    const Eigen::MatrixXd cov = sigma2 * (X.transpose() * X).inverse();
    OlsFit fit;
    for (std::size_t k = 0; k + 1 < cols; ++k) {
        fit.beta.push_back(b(k));
        fit.se.push_back(std::sqrt(cov(k, k)));
    }
    return fit;
}

double lagged_corr(const MultivariateSeries& s, std::size_t src, std::size_t dst, std::size_t lag) {
    const std::size_t n = s.length() - lag;
    double ma = 0, mb = 0;
    for (std::size_t t = 0; t < n; ++t) {
        ma += s(src, t);
        mb += s(dst, t + lag);
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double a = s(src, t) - ma;
        const double b = s(dst, t + lag) - mb;
        sab += a * b;
        saa += a * a;
        sbb += b * b;
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace

TEST(Motif, ForkWithUnitLagsHasExpectedTruth) {
    MotifConfig c;
    c.kind = MotifKind::Fork;
    c.lags = {1, 1};
    c.seed = 4;
    const auto d = gen_motif(c);
    EXPECT_EQ(d.series.n_vars(), 3u);
    EXPECT_EQ(d.series.var_names(), (std::vector<std::string>{"A", "B", "C"}));
    const auto& g = d.truth.graph;
    EXPECT_EQ(g.size(), 5u);
    EXPECT_EQ(g.find(0, 1)->lag, 1u);
    EXPECT_EQ(g.find(0, 2)->lag, 1u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g.find(i, i)->lag, 1u);
    EXPECT_TRUE(d.truth.has_lags);
}

TEST(Motif, OlsRecoversGeneratingCoefficients) {
    for (auto kind : {MotifKind::Fork, MotifKind::VStructure, MotifKind::Mediator, MotifKind::Diamond}) {
        MotifConfig c;
        c.kind = kind;
        c.length = 4000;
        c.seed = 9;
        const auto d = gen_motif(c);
        const auto& A = *d.coefficients;
        const std::size_t n = A.n_vars();
        const std::size_t L = A.max_lag();
        for (std::size_t dst = 0; dst < n; ++dst) {
            const auto fit = ols_on_lags(d.series, dst, L);
            for (std::size_t lag = 1; lag <= L; ++lag) {
                for (std::size_t src = 0; src < n; ++src) {
                    const std::size_t k = (lag - 1) * n + src;
                    EXPECT_LE(std::abs(fit.beta[k] - A.at(lag, src, dst)), 4.0 * fit.se[k])
                        << to_string(kind) << " lag " << lag << " " << src << "->" << dst;
                }
            }
            // Every true parent's dominant OLS lag is the generating lag.
            for (std::size_t src : d.truth.graph.parents(dst)) {
                std::size_t best = 1;
                for (std::size_t lag = 2; lag <= L; ++lag) {
                    if (std::abs(fit.beta[(lag - 1) * n + src]) > std::abs(fit.beta[(best - 1) * n + src])) {
                        best = lag;
                    }
                }
                EXPECT_EQ(best, d.truth.graph.find(src, dst)->lag);
            }
        }
    }
}

TEST(Motif, DiamondTopology) {
    MotifConfig c;
    c.kind = MotifKind::Diamond;
    const auto g = gen_motif(c).truth.graph.without_self_loops();
    EXPECT_EQ(g.size(), 4u);
    EXPECT_TRUE(g.contains(0, 1));
    EXPECT_TRUE(g.contains(0, 2));
    EXPECT_TRUE(g.contains(1, 3));
    EXPECT_TRUE(g.contains(2, 3));
}

TEST(Motif, DeterministicGivenSeed) {
    MotifConfig c;
    c.kind = MotifKind::Mediator;
    c.seed = 77;
    EXPECT_EQ(gen_motif(c).series, gen_motif(c).series);
    auto c2 = c;
    c2.seed = 78;
    EXPECT_NE(gen_motif(c).series, gen_motif(c2).series);
}

TEST(Motif, RejectsInvalidLagsAndNoise) {
    MotifConfig c;
    c.length = 30;
    c.lags = {1, 30};
    EXPECT_THROW(gen_motif(c), Error);
    c.lags = {1, 5};
    try {
        gen_motif(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
    }
    c.lags = {1, 1};
    c.noise_std = 0.0;
    EXPECT_THROW(gen_motif(c), Error);
    EXPECT_THROW(parse_motif_kind("triangle"), Error);
}

TEST(Lorenz96, ShapeAndBoundedness) {
    Lorenz96Config c;
    c.seed = 1;
    const auto d = gen_lorenz96(c);
    EXPECT_EQ(d.series.n_vars(), 10u);
    EXPECT_EQ(d.series.length(), 1000u);
    for (double v : d.series.values()) EXPECT_LT(std::abs(v), 30.0);
}

TEST(Lorenz96, ConsecutiveSamplesFollowOneRk4Step) {
    Lorenz96Config c;
    c.n_vars = 6;
    c.length = 60;
    c.seed = 2;
    const auto d = gen_lorenz96(c);
    const std::size_t n = c.n_vars;
    auto f = [&](const std::vector<double>& x) {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = (x[(i + 1) % n] - x[(i + n - 2) % n]) * x[(i + n - 1) % n] - x[i] + c.forcing;
        }
        return out;
    };
    auto add = [&](const std::vector<double>& x, const std::vector<double>& k, double h) {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + h * k[i];
        return out;
    };
    for (std::size_t t = 0; t + 1 < c.length; ++t) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = d.series(i, t);
        const auto k1 = f(x);
        const auto k2 = f(add(x, k1, c.dt / 2));
        const auto k3 = f(add(x, k2, c.dt / 2));
        const auto k4 = f(add(x, k3, c.dt));
        for (std::size_t i = 0; i < n; ++i) {
            const double next = x[i] + c.dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
            EXPECT_NEAR(d.series(i, t + 1), next, 1e-12);
        }
    }
}

TEST(Lorenz96, SensitiveToInitialConditions) {
    Lorenz96Config a;
    a.seed = 1;
    auto b = a;
    b.seed = 2;
    const auto da = gen_lorenz96(a);
    const auto db = gen_lorenz96(b);
    double diff = 0.0;
    for (std::size_t k = 0; k < da.series.values().size(); ++k) {
        diff = std::max(diff, std::abs(da.series.values()[k] - db.series.values()[k]));
    }
    EXPECT_GT(diff, 1.0);
}

TEST(Lorenz96, MinimalSystemInDegreeFour) {
    Lorenz96Config c;
    c.n_vars = 4;
    c.length = 50;
    const auto d = gen_lorenz96(c);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(d.truth.graph.parents(i).size(), 4u);
        for (std::size_t p : d.truth.graph.parents(i)) EXPECT_EQ(d.truth.graph.find(p, i)->lag, 1u);
    }
}

TEST(Lorenz96, DeterministicAndValidated) {
    Lorenz96Config c;
    c.length = 100;
    EXPECT_EQ(gen_lorenz96(c).series, gen_lorenz96(c).series);
    c.n_vars = 3;
    EXPECT_THROW(gen_lorenz96(c), Error);
    c.n_vars = 5;
    c.dt = 0.5;
    EXPECT_THROW(gen_lorenz96(c), Error);
}

TEST(LinearVar, SingleEntryTruth) {
    VarCoefficients A(2, 2);
    A.at(2, 0, 1) = 0.8;
    const auto d = gen_linear_var(A, 200, 0.1, 3);
    ASSERT_EQ(d.truth.graph.size(), 1u);
    EXPECT_EQ(d.truth.graph.edges()[0].src, 0u);
    EXPECT_EQ(d.truth.graph.edges()[0].dst, 1u);
    EXPECT_EQ(d.truth.graph.edges()[0].lag, 2u);
}

TEST(LinearVar, ZeroCoefficientsGiveNoiseAndNoEdges) {
    const VarCoefficients A(3, 1);
    const auto d = gen_linear_var(A, 5000, 0.5, 3);
    EXPECT_EQ(d.truth.graph.size(), 0u);
    double sum = 0, sq = 0;
    for (double v : d.series.row(0)) {
        sum += v;
        sq += v * v;
    }
    const double mean = sum / 5000;
    EXPECT_NEAR(mean, 0.0, 0.05);
    EXPECT_NEAR(sq / 5000 - mean * mean, 0.25, 0.03);
}

TEST(LinearVar, UnstableCoefficientsRejected) {
    VarCoefficients A(2, 1);
    A.at(1, 0, 0) = 1.1;
    try {
        gen_linear_var(A, 100, 0.1, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Stability);
    }
}

TEST(LinearVar, SpectralRadiusMatchesHandCases) {
    VarCoefficients A(2, 1);
    A.at(1, 0, 0) = 0.5;
    A.at(1, 1, 1) = -0.3;
    EXPECT_NEAR(A.spectral_radius(), 0.5, 1e-12);
    // x_t = 0.5 x_{t-2}: companion eigenvalues +-sqrt(0.5)
    VarCoefficients B(1, 2);
    B.at(2, 0, 0) = 0.5;
    EXPECT_NEAR(B.spectral_radius(), std::sqrt(0.5), 1e-12);
}

TEST(LinearVar, CrossCorrelationPeaksAtTrueLags) {
    RandomVarConfig rc;
    rc.n_vars = 5;
    rc.n_cross_edges = 4;
    rc.self_weight = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        rc.seed = seed;
        const auto A = random_sparse_var(rc);
        const auto d = gen_linear_var(A, 2000, 0.05, seed);
        for (const auto& e : d.truth.graph.edges()) {
            if (e.src == e.dst) continue;
            // Only edges whose target has a single parent give a clean peak.
            if (d.truth.graph.parents(e.dst).size() != 1) continue;
            std::size_t best = 1;
            for (std::size_t lag = 2; lag <= rc.max_lag + 2; ++lag) {
                if (std::abs(lagged_corr(d.series, e.src, e.dst, lag)) >
                    std::abs(lagged_corr(d.series, e.src, e.dst, best))) {
                    best = lag;
                }
            }
            EXPECT_EQ(best, e.lag) << "seed " << seed << " " << e.src << "->" << e.dst;
        }
    }
}

TEST(LinearVar, RandomSparseDrawIsStableAndSparse) {
    RandomVarConfig rc;
    rc.n_vars = 10;
    rc.n_cross_edges = 10;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        rc.seed = seed;
        const auto A = random_sparse_var(rc);
        EXPECT_LT(A.spectral_radius(), 0.95);
        EXPECT_EQ(A.support_graph().without_self_loops().size(), 10u);
        EXPECT_NO_THROW(TemporalGraph(10, A.support_graph().edges()));
    }
}
