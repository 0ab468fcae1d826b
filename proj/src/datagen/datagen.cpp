#include "cinsight/datagen.hpp"

#include "cinsight/error.hpp"
#include "cinsight/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace cinsight {

namespace {

constexpr std::size_t kVarBurnIn = 200;
constexpr double kDivergenceBound = 1e6;

void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorKind::InvalidConfig, msg);
}

} // namespace

VarCoefficients::VarCoefficients(std::size_t n_vars, std::size_t max_lag)
    : n_vars_(n_vars), max_lag_(max_lag), values_(n_vars * n_vars * max_lag, 0.0) {
    require(n_vars >= 1, "VAR needs at least one variable");
    require(max_lag >= 1, "VAR max lag must be >= 1");
}

double VarCoefficients::at(std::size_t lag, std::size_t src, std::size_t dst) const {
    if (lag < 1 || lag > max_lag_ || src >= n_vars_ || dst >= n_vars_) {
        throw Error(ErrorKind::InvalidInput, "VAR coefficient index out of range");
    }
    return values_[((lag - 1) * n_vars_ + src) * n_vars_ + dst];
}

double& VarCoefficients::at(std::size_t lag, std::size_t src, std::size_t dst) {
    if (lag < 1 || lag > max_lag_ || src >= n_vars_ || dst >= n_vars_) {
        throw Error(ErrorKind::InvalidInput, "VAR coefficient index out of range");
    }
    return values_[((lag - 1) * n_vars_ + src) * n_vars_ + dst];
}

double VarCoefficients::spectral_radius() const {
    const auto n = static_cast<Eigen::Index>(n_vars_);
    const auto dim = n * static_cast<Eigen::Index>(max_lag_);
    // State (x_t, x_{t-1}, ..., x_{t-L+1}); block row 0 holds A_lag^T.
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t lag = 1; lag <= max_lag_; ++lag) {
        for (std::size_t src = 0; src < n_vars_; ++src) {
            for (std::size_t dst = 0; dst < n_vars_; ++dst) {
                companion(static_cast<Eigen::Index>(dst),
                          static_cast<Eigen::Index>((lag - 1) * n_vars_ + src)) =
                    at(lag, src, dst);
            }
        }
    }
    if (dim > n) companion.block(n, 0, dim - n, dim - n).setIdentity();
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

TemporalGraph VarCoefficients::support_graph() const {
    std::vector<LaggedEdge> edges;
    for (std::size_t src = 0; src < n_vars_; ++src) {
        for (std::size_t dst = 0; dst < n_vars_; ++dst) {
            double best = 0.0;
            std::size_t best_lag = 0;
            for (std::size_t lag = 1; lag <= max_lag_; ++lag) {
                const double mag = std::fabs(at(lag, src, dst));
                if (mag > best) {
                    best = mag;
                    best_lag = lag;
                }
            }
            if (best > 0.0) edges.push_back({src, dst, best_lag, best});
        }
    }
    return TemporalGraph(n_vars_, std::move(edges), Directionality::AllowBoth);
}

std::string_view to_string(MotifKind kind) {
    switch (kind) {
    case MotifKind::Fork: return "fork";
    case MotifKind::VStructure: return "v";
    case MotifKind::Mediator: return "mediator";
    case MotifKind::Diamond: return "diamond";
    }
    return "unknown";
}

MotifKind parse_motif_kind(std::string_view name) {
    if (name == "fork") return MotifKind::Fork;
    if (name == "v" || name == "v-structure" || name == "vstructure") return MotifKind::VStructure;
    if (name == "mediator") return MotifKind::Mediator;
    if (name == "diamond") return MotifKind::Diamond;
    throw Error(ErrorKind::InvalidConfig, "unknown motif '" + std::string(name) + "'");
}

std::size_t motif_size(MotifKind kind) { return kind == MotifKind::Diamond ? 4 : 3; }

std::vector<MotifEdge> motif_topology(MotifKind kind) {
    switch (kind) {
    case MotifKind::Fork: return {{0, 1}, {0, 2}};
    case MotifKind::VStructure: return {{0, 2}, {1, 2}};
    case MotifKind::Mediator: return {{0, 1}, {1, 2}, {0, 2}};
    case MotifKind::Diamond: return {{0, 1}, {0, 2}, {1, 3}, {2, 3}};
    }
    return {};
}

GeneratedData gen_motif(const MotifConfig& config) {
    const auto topology = motif_topology(config.kind);
    const std::size_t n = motif_size(config.kind);
    require(config.noise_std > 0.0 && std::isfinite(config.noise_std), "noise_std must be > 0");
    require(config.lags.empty() || config.lags.size() == topology.size(),
            "motif '" + std::string(to_string(config.kind)) + "' needs " +
                std::to_string(topology.size()) + " lags");

    Rng rng(derive_seed(config.seed, "motif"));
    std::uniform_int_distribution<std::size_t> lag_dist(1, 3);
    std::uniform_real_distribution<double> mag_dist(0.5, 1.0);
    std::bernoulli_distribution sign_dist(0.5);

    std::vector<std::size_t> lags = config.lags;
    if (lags.empty()) {
        for (std::size_t e = 0; e < topology.size(); ++e) lags.push_back(lag_dist(rng));
    }
    const std::size_t max_lag = std::max<std::size_t>(1, *std::max_element(lags.begin(), lags.end()));
    for (auto lag : lags) {
        require(lag >= 1, "motif lags must be >= 1");
        require(lag < config.length, "lag " + std::to_string(lag) + " >= series length");
    }
    require(config.length >= 10 * max_lag,
            "series length must be at least 10x the largest lag");

    VarCoefficients coef(n, max_lag);
    for (std::size_t i = 0; i < n; ++i) coef.at(1, i, i) = config.self_weight;
    for (std::size_t e = 0; e < topology.size(); ++e) {
        const double w = mag_dist(rng) * (sign_dist(rng) ? 1.0 : -1.0);
        coef.at(lags[e], topology[e].src, topology[e].dst) = w;
    }

    auto data = gen_linear_var(coef, config.length, config.noise_std,
                               derive_seed(config.seed, "motif-noise"));
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.emplace_back(1, static_cast<char>('A' + i));
    std::vector<double> values(data.series.values().begin(), data.series.values().end());
    data.series = MultivariateSeries(n, config.length, std::move(values), std::move(names));
    return data;
}

GeneratedData gen_lorenz96(const Lorenz96Config& config) {
    const std::size_t n = config.n_vars;
    require(n >= 4, "Lorenz-96 needs N >= 4");
    require(config.dt > 0.0 && config.dt <= 0.1, "Lorenz-96 dt must lie in (0, 0.1]");
    require(config.length >= 50, "Lorenz-96 needs T >= 50");
    require(config.noise_std >= 0.0, "noise_std must be >= 0");

    Rng rng(derive_seed(config.seed, "lorenz96"));
    std::normal_distribution<double> init(0.0, 0.1);
    std::vector<double> x(n);
    for (auto& v : x) v = config.forcing + init(rng);

    auto deriv = [&](const std::vector<double>& s, std::vector<double>& out) {
        for (std::size_t i = 0; i < n; ++i) {
            const double xp1 = s[(i + 1) % n];
            const double xm1 = s[(i + n - 1) % n];
            const double xm2 = s[(i + n - 2) % n];
            out[i] = (xp1 - xm2) * xm1 - s[i] + config.forcing;
        }
    };
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    const double h = config.dt;
    auto step = [&](std::size_t step_index) {
        deriv(x, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        deriv(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        deriv(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
        deriv(tmp, k4);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (!std::isfinite(x[i]) || std::fabs(x[i]) > kDivergenceBound) {
                throw Error(ErrorKind::Integration,
                            "trajectory diverged at step " + std::to_string(step_index));
            }
        }
    };

    std::size_t step_index = 0;
    for (std::size_t s = 0; s < config.burn_in; ++s) step(step_index++);

    std::normal_distribution<double> obs(0.0, config.noise_std > 0.0 ? config.noise_std : 1.0);
    std::vector<double> values(n * config.length);
    for (std::size_t t = 0; t < config.length; ++t) {
        if (t > 0) step(step_index++);
        for (std::size_t i = 0; i < n; ++i) {
            values[i * config.length + t] = x[i] + (config.noise_std > 0.0 ? obs(rng) : 0.0);
        }
    }

    std::vector<LaggedEdge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t parent : {(i + n - 2) % n, (i + n - 1) % n, i, (i + 1) % n}) {
            edges.push_back({parent, i, 1, 1.0});
        }
    }
    return GeneratedData{MultivariateSeries(n, config.length, std::move(values)),
                         GroundTruth{TemporalGraph(n, std::move(edges), Directionality::AllowBoth),
                                     config.has_lags},
                         std::nullopt};
}

GeneratedData gen_linear_var(const VarCoefficients& coefficients, std::size_t length,
                             double noise_std, std::uint64_t seed) {
    const std::size_t n = coefficients.n_vars();
    const std::size_t max_lag = coefficients.max_lag();
    require(noise_std > 0.0 && std::isfinite(noise_std), "noise_std must be > 0");
    require(length >= 2, "series length must be >= 2");
    require(length > max_lag, "max lag must be shorter than the series");
    const double radius = coefficients.spectral_radius();
    if (!(radius < 1.0)) {
        throw Error(ErrorKind::Stability,
                    "companion spectral radius " + std::to_string(radius) + " >= 1");
    }

    Rng rng(derive_seed(seed, "var"));
    std::normal_distribution<double> noise(0.0, noise_std);
    const std::size_t total = length + kVarBurnIn;
    std::vector<double> sim(total * n, 0.0); // time-major while simulating
    for (std::size_t t = 0; t < total; ++t) {
        for (std::size_t dst = 0; dst < n; ++dst) {
            double v = 0.0;
            for (std::size_t lag = 1; lag <= max_lag && lag <= t; ++lag) {
                for (std::size_t src = 0; src < n; ++src) {
                    v += coefficients.at(lag, src, dst) * sim[(t - lag) * n + src];
                }
            }
            sim[t * n + dst] = v + noise(rng);
        }
    }
    std::vector<double> values(n * length);
    for (std::size_t t = 0; t < length; ++t) {
        for (std::size_t i = 0; i < n; ++i) values[i * length + t] = sim[(t + kVarBurnIn) * n + i];
    }
    return GeneratedData{MultivariateSeries(n, length, std::move(values)),
                         GroundTruth{coefficients.support_graph(), true}, coefficients};
}

VarCoefficients random_sparse_var(const RandomVarConfig& config) {
    const std::size_t n = config.n_vars;
    require(n >= 2 || config.n_cross_edges == 0, "cross edges need at least two variables");
    require(config.n_cross_edges <= n * (n - 1) / 2, "more cross edges than variable pairs");
    require(config.max_lag >= 1, "max lag must be >= 1");
    require(0.0 < config.min_weight && config.min_weight <= config.max_weight,
            "weight range must satisfy 0 < min <= max");

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    }
    Rng rng(derive_seed(config.seed, "random-var"));
    std::uniform_int_distribution<std::size_t> lag_dist(1, config.max_lag);
    std::uniform_real_distribution<double> mag_dist(config.min_weight, config.max_weight);
    std::bernoulli_distribution coin(0.5);

    constexpr int kAttempts = 200;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        VarCoefficients coef(n, config.max_lag);
        if (config.self_weight != 0.0) {
            for (std::size_t i = 0; i < n; ++i) coef.at(1, i, i) = config.self_weight;
        }
        std::shuffle(pairs.begin(), pairs.end(), rng);
        for (std::size_t e = 0; e < config.n_cross_edges; ++e) {
            auto [a, b] = pairs[e];
            if (coin(rng)) std::swap(a, b);
            const double w = mag_dist(rng) * (coin(rng) ? 1.0 : -1.0);
            coef.at(lag_dist(rng), a, b) = w;
        }
        if (coef.spectral_radius() < 0.95) return coef;
    }
    throw Error(ErrorKind::Stability, "no stable coefficient draw found");
}

} // namespace cinsight
