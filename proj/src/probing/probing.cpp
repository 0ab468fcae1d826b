#include "cinsight/probing.hpp"

#include "cinsight/error.hpp"
#include "cinsight/io.hpp"
#include "cinsight/kernels/kernels.hpp"
#include "cinsight/rng.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <string>

namespace cinsight {

std::string_view to_string(ClampMode mode) {
    switch (mode) {
    case ClampMode::PerVariableMax: return "max";
    case ClampMode::Zero: return "zero";
    case ClampMode::Fixed: return "fixed";
    }
    return "unknown";
}

ClampMode parse_clamp_mode(std::string_view s) {
    if (s == "max") return ClampMode::PerVariableMax;
    if (s == "zero") return ClampMode::Zero;
    if (s == "fixed") return ClampMode::Fixed;
    throw Error(ErrorKind::InvalidConfig, "unknown clamp mode '" + std::string(s) + "'");
}

void ClampPolicy::validate(std::size_t length, std::size_t window) const {
    if (mode == ClampMode::Fixed && !std::isfinite(fixed_value)) {
        throw Error(ErrorKind::InvalidConfig, "fixed clamp value must be finite");
    }
    if (resolve_t0(window) >= length) {
        throw Error(ErrorKind::InvalidConfig, "clamp index t0=" + std::to_string(resolve_t0(window)) +
                                                  " outside series of length " +
                                                  std::to_string(length));
    }
}

double clamp_value(const MultivariateSeries& series, std::size_t var, const ClampPolicy& policy) {
    if (var >= series.n_vars()) throw Error(ErrorKind::InvalidInput, "clamp variable out of range");
    switch (policy.mode) {
    case ClampMode::PerVariableMax: {
        const auto row = series.row(var);
        return *std::max_element(row.begin(), row.end());
    }
    case ClampMode::Zero: return 0.0;
    case ClampMode::Fixed: return policy.fixed_value;
    }
    return 0.0;
}

MultivariateSeries clamp_input(const MultivariateSeries& series, std::size_t var,
                               const ClampPolicy& policy, std::size_t window) {
    policy.validate(series.length(), window);
    return series.with_value(var, policy.resolve_t0(window), clamp_value(series, var, policy));
}

InfluenceTensor::InfluenceTensor(std::size_t n_vars, std::size_t length, std::size_t valid_from,
                                 std::size_t t0, std::vector<double> values)
    : n_(n_vars), len_(length), valid_from_(valid_from), t0_(t0), values_(std::move(values)) {
    if (values_.size() != n_ * n_ * len_) {
        throw Error(ErrorKind::InvalidInput, "influence tensor buffer does not match N x N x T");
    }
    if (valid_from_ >= len_ || t0_ >= len_) {
        throw Error(ErrorKind::InvalidInput, "influence tensor valid_from/t0 out of range");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        const double v = values_[k];
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorKind::InvalidInput, "influence entries must be finite and >= 0");
        }
        if (k % len_ < valid_from_ && v != 0.0) {
            throw Error(ErrorKind::InvalidInput, "influence entries before valid_from must be 0");
        }
    }
}

ProbeResult influence_tensor(const TrainedPredictor& predictor, const MultivariateSeries& series,
                             const ClampPolicy& policy, std::size_t threads) {
    const std::size_t n = series.n_vars();
    const std::size_t len = series.length();
    const std::size_t K = predictor.window();
    policy.validate(len, K);
    const std::size_t t0 = policy.resolve_t0(K);

    const auto baseline = predictor.predict_series(series);
    const std::size_t valid_from = baseline.valid_from;
    std::vector<double> values(n * n * len, 0.0);
    std::vector<double> xstar(n);

    auto probe_var = [&](std::size_t i) {
        try {
            xstar[i] = clamp_value(series, i, policy);
            const auto clamped = series.with_value(i, t0, xstar[i]);
            const auto response = predictor.predict_series(clamped);
            for (std::size_t j = 0; j < n; ++j) {
                double* out = values.data() + (i * n + j) * len + valid_from;
                kernels::active().abs_diff(response.valid_row(j).data(),
                                           baseline.valid_row(j).data(), out, len - valid_from);
            }
        } catch (const Error& e) {
            throw Error(e.kind(), "probing variable " + std::to_string(i) + ": " + e.message());
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) probe_var(i);
    } else {
        std::vector<std::future<void>> jobs;
        for (std::size_t w = 0; w < workers; ++w) {
            jobs.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < n; i += workers) probe_var(i);
            }));
        }
        for (auto& j : jobs) j.get();
    }
    return ProbeResult{InfluenceTensor(n, len, valid_from, t0, std::move(values)), std::move(xstar)};
}

InfluenceTensor permute_tensor(const InfluenceTensor& tensor, std::uint64_t seed) {
    const std::size_t n = tensor.n_vars();
    const std::size_t len = tensor.length();
    const std::size_t vf = tensor.valid_from();
    const std::size_t span = len - vf;
    std::vector<double> pool;
    pool.reserve(n * n * span);
    for (std::size_t p = 0; p < n * n; ++p) {
        const auto s = tensor.values().subspan(p * len + vf, span);
        pool.insert(pool.end(), s.begin(), s.end());
    }
    Rng rng(derive_seed(seed, "permute"));
    for (std::size_t k = pool.size(); k > 1; --k) {
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        std::swap(pool[k - 1], pool[pick(rng)]);
    }
    std::vector<double> values(n * n * len, 0.0);
    for (std::size_t p = 0; p < n * n; ++p) {
        std::copy_n(pool.begin() + static_cast<std::ptrdiff_t>(p * span), span,
                    values.begin() + static_cast<std::ptrdiff_t>(p * len + vf));
    }
    return InfluenceTensor(n, len, vf, tensor.t0(), std::move(values));
}

nlohmann::json to_json(const ClampPolicy& policy) {
    nlohmann::json j{{"mode", to_string(policy.mode)}, {"fixed_value", policy.fixed_value}};
    j["t0"] = policy.t0 ? nlohmann::json(*policy.t0) : nlohmann::json(nullptr);
    return j;
}

namespace {

template <typename T>
T to_little_endian(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <typename T>
void put(std::string& buf, T v) {
    v = to_little_endian(v);
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.append(raw, sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t& pos) {
    if (pos + sizeof(T) > buf.size()) throw Error(ErrorKind::Parse, "tensor file truncated");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return to_little_endian(v);
}

} // namespace

void save_tensor(const ProbeResult& probe, const ClampPolicy& policy,
                 const std::filesystem::path& bin_path, const std::filesystem::path& json_path) {
    const auto& s = probe.tensor;
    std::string buf;
    buf.reserve(32 + s.values().size() * 8);
    put<std::uint64_t>(buf, s.n_vars());
    put<std::uint64_t>(buf, s.n_vars());
    put<std::uint64_t>(buf, s.length());
    put<std::uint64_t>(buf, s.valid_from());
    for (double v : s.values()) put<double>(buf, v);
    write_text_file(bin_path, buf);

    nlohmann::json meta{{"format", "causal-insight-influence"},
                        {"n_vars", s.n_vars()},
                        {"length", s.length()},
                        {"valid_from", s.valid_from()},
                        {"t0", s.t0()},
                        {"policy", to_json(policy)},
                        {"clamp_values", probe.clamp_values}};
    write_text_file(json_path, meta.dump(2) + "\n");
}

InfluenceTensor load_tensor(const std::filesystem::path& bin_path,
                            const std::optional<std::filesystem::path>& json_path) {
    const std::string buf = read_text_file(bin_path);
    std::size_t pos = 0;
    const auto n1 = get<std::uint64_t>(buf, pos);
    const auto n2 = get<std::uint64_t>(buf, pos);
    const auto len = get<std::uint64_t>(buf, pos);
    const auto vf = get<std::uint64_t>(buf, pos);
    if (n1 != n2) throw Error(ErrorKind::Parse, "tensor header has mismatched N");
    if (buf.size() != 32 + n1 * n1 * len * 8) {
        throw Error(ErrorKind::Parse, "tensor payload size does not match header");
    }
    std::vector<double> values(n1 * n1 * len);
    for (auto& v : values) v = get<double>(buf, pos);
    std::size_t t0 = vf;
    if (json_path) {
        try {
            const auto meta = nlohmann::json::parse(read_text_file(*json_path));
            t0 = meta.at("t0").get<std::size_t>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, json_path->string() + ": " + e.what());
        }
    }
    return InfluenceTensor(n1, len, vf, t0, std::move(values));
}

} // namespace cinsight
