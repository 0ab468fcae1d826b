#include "cinsight/predictor.hpp"

#include "cinsight/error.hpp"
#include "cinsight/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace cinsight {

CausalMask::CausalMask(const MaskSpec& spec)
    : n_vars_(spec.n_vars), window_(spec.window), open_(spec.n_vars * spec.window, 1) {
    if (spec.n_vars < 1 || spec.window < 1 || spec.target >= spec.n_vars) {
        throw Error(ErrorKind::InvalidInput, "mask spec needs N >= 1, K >= 1, target < N");
    }
    open_[spec.target * window_ + 0] = 0;
}

std::size_t CausalMask::open_count() const {
    return static_cast<std::size_t>(std::count(open_.begin(), open_.end(), std::uint8_t{1}));
}

CausalMask build_causal_mask(const MaskSpec& spec) { return CausalMask(spec); }

WindowMatrix build_windows(const MultivariateSeries& series, std::size_t window) {
    const std::size_t n = series.n_vars();
    const std::size_t len = series.length();
    if (window < 1) throw Error(ErrorKind::InvalidInput, "window must be >= 1");
    if (len < window) {
        throw Error(ErrorKind::InsufficientData, "series of length " + std::to_string(len) +
                                                     " is shorter than window " +
                                                     std::to_string(window));
    }
    WindowMatrix w;
    w.window = window;
    w.first_t = window - 1;
    w.rows = len - window + 1;
    w.cols = n * window;
    w.data.resize(w.rows * w.cols);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const std::size_t t = w.first_t + r;
        double* out = w.data.data() + r * w.cols;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t lag = 0; lag < window; ++lag) out[i * window + lag] = series(i, t - lag);
        }
    }
    return w;
}

HeadShape::HeadShape(std::size_t n_inputs, std::vector<std::size_t> hidden) {
    if (n_inputs < 1) throw Error(ErrorKind::InvalidInput, "head needs at least one input");
    sizes_.push_back(n_inputs);
    for (auto h : hidden) {
        if (h < 1) throw Error(ErrorKind::InvalidConfig, "hidden layer sizes must be >= 1");
        sizes_.push_back(h);
    }
    sizes_.push_back(1);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(n_params_);
        n_params_ += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
}

namespace {

// Per-call scratch for one row: activations of every layer plus backprop
// buffers.
struct Scratch {
    std::vector<std::vector<double>> act; // act[0] = masked input, act[l] = layer l output
    std::vector<double> delta;
    std::vector<double> delta_prev;

    explicit Scratch(const HeadShape& shape) {
        for (auto s : shape.layer_sizes()) act.emplace_back(s, 0.0);
    }
};

double forward_row(const HeadShape& shape, std::span<const double> params,
                   std::span<const std::uint8_t> input_open, const double* row, Scratch& s) {
    const auto& k = kernels::active();
    const auto& sizes = shape.layer_sizes();
    auto& in = s.act[0];
    for (std::size_t c = 0; c < sizes[0]; ++c) in[c] = input_open[c] ? row[c] : 0.0;
    const std::size_t n_layers = sizes.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        auto& out = s.act[l + 1];
        k.gemv(params.data() + shape.weight_offset(l), sizes[l + 1], sizes[l], s.act[l].data(),
               params.data() + shape.bias_offset(l), out.data());
        if (l + 1 < n_layers) {
            for (auto& v : out) v = std::tanh(v);
        }
    }
    return s.act[n_layers][0];
}

void check_head_args(const HeadShape& shape, std::span<const double> params,
                     std::span<const std::uint8_t> input_open, const WindowMatrix& windows) {
    if (params.size() != shape.n_params() || input_open.size() != shape.n_inputs() ||
        windows.cols != shape.n_inputs()) {
        throw Error(ErrorKind::InvalidInput, "head parameter/input shape mismatch");
    }
}

} // namespace

std::vector<double> head_forward(const HeadShape& shape, std::span<const double> params,
                                 std::span<const std::uint8_t> input_open,
                                 const WindowMatrix& windows) {
    check_head_args(shape, params, input_open, windows);
    Scratch s(shape);
    std::vector<double> out(windows.rows);
    for (std::size_t r = 0; r < windows.rows; ++r) {
        out[r] = forward_row(shape, params, input_open, windows.data.data() + r * windows.cols, s);
    }
    return out;
}

double head_loss(const HeadShape& shape, std::span<const double> params,
                 std::span<const std::uint8_t> input_open, const WindowMatrix& windows,
                 std::span<const double> targets, std::span<double> grad) {
    check_head_args(shape, params, input_open, windows);
    if (targets.size() != windows.rows || windows.rows == 0) {
        throw Error(ErrorKind::InvalidInput, "targets must match window rows");
    }
    const bool want_grad = !grad.empty();
    if (want_grad) {
        if (grad.size() != params.size()) throw Error(ErrorKind::InvalidInput, "gradient size");
        std::fill(grad.begin(), grad.end(), 0.0);
    }
    const auto& k = kernels::active();
    const auto& sizes = shape.layer_sizes();
    const std::size_t n_layers = sizes.size() - 1;
    const double inv_n = 1.0 / static_cast<double>(windows.rows);

    Scratch s(shape);
    double sse = 0.0;
    for (std::size_t r = 0; r < windows.rows; ++r) {
        const double y_hat =
            forward_row(shape, params, input_open, windows.data.data() + r * windows.cols, s);
        const double err = y_hat - targets[r];
        sse += err * err;
        if (!want_grad) continue;

        s.delta.assign(1, 2.0 * err * inv_n);
        for (std::size_t l = n_layers; l-- > 0;) {
            const std::size_t n_out = sizes[l + 1];
            const std::size_t n_in = sizes[l];
            const double* w = params.data() + shape.weight_offset(l);
            double* gw = grad.data() + shape.weight_offset(l);
            double* gb = grad.data() + shape.bias_offset(l);
            const double* a_in = s.act[l].data();
            for (std::size_t o = 0; o < n_out; ++o) {
                k.axpy(s.delta[o], a_in, gw + o * n_in, n_in);
                gb[o] += s.delta[o];
            }
            if (l == 0) break;
            s.delta_prev.assign(n_in, 0.0);
            for (std::size_t o = 0; o < n_out; ++o) {
                k.axpy(s.delta[o], w + o * n_in, s.delta_prev.data(), n_in);
            }
            for (std::size_t c = 0; c < n_in; ++c) {
                const double a = s.act[l][c];
                s.delta_prev[c] *= 1.0 - a * a;
            }
            std::swap(s.delta, s.delta_prev);
        }
    }
    return sse * inv_n;
}

} // namespace cinsight
