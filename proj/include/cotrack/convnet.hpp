#pragma once

// Small fully-convolutional center-prediction network with hand-written
// forward/backward passes and Adam. Everything is templated on the scalar so
// the same code runs in float inside the tracker and in double for gradient
// checks.
//
// Activations are stored channel-major: a Tensor holds a channels x (h * w)
// row-major matrix, so every 3x3 convolution is one GEMM over an im2col buffer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cotrack/error.hpp"
#include "cotrack/geometry.hpp"

namespace cotrack::convnet {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    Mat<Scalar> data;  // channels x (height * width)

    static Tensor zeros(int c, int h, int w) {
        Tensor t;
        t.channels = c;
        t.height = h;
        t.width = w;
        t.data = Mat<Scalar>::Zero(c, static_cast<Eigen::Index>(h) * w);
        return t;
    }
    Scalar& at(int c, int y, int x) { return data(c, static_cast<Eigen::Index>(y) * width + x); }
    Scalar at(int c, int y, int x) const { return data(c, static_cast<Eigen::Index>(y) * width + x); }
};

/// Encoder widths (3x3 conv + ReLU each), 2x2 max-pools after the listed
/// encoder layers (1-based), then head widths ending in one linear channel.
struct ChannelPlan {
    int input = 9;
    std::vector<int> encoder{8, 8, 16, 16, 16, 16, 16};
    std::vector<int> head{8, 4, 2, 1};
    std::vector<int> pool_after{2, 4};

    int downsample() const { return 1 << pool_after.size(); }
};

template <typename Scalar>
struct LayerParams {
    Mat<Scalar> weights;  // out x (in * 9), column index in * 9 + ky * 3 + kx
    Vec<Scalar> bias;
};

template <typename Scalar>
struct ConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    bool relu = true;
    bool pool_after = false;
    LayerParams<Scalar> params;
};

template <typename Scalar>
struct ConvNet {
    ChannelPlan plan;
    std::vector<ConvLayer<Scalar>> layers;

    Eigen::Index parameter_count() const {
        Eigen::Index n = 0;
        for (const auto& l : layers) n += l.params.weights.size() + l.params.bias.size();
        return n;
    }
};

template <typename Scalar>
using Gradients = std::vector<LayerParams<Scalar>>;

template <typename Scalar>
Gradients<Scalar> zero_like(const ConvNet<Scalar>& net) {
    Gradients<Scalar> g(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        g[i].weights = Mat<Scalar>::Zero(net.layers[i].params.weights.rows(), net.layers[i].params.weights.cols());
        g[i].bias = Vec<Scalar>::Zero(net.layers[i].params.bias.size());
    }
    return g;
}

/// He-scaled uniform weights, zero biases; deterministic per seed.
template <typename Scalar>
ConvNet<Scalar> net_init(std::uint64_t seed, const ChannelPlan& plan = {}) {
    if (plan.input < 1 || plan.encoder.empty() || plan.head.empty() || plan.head.back() != 1)
        throw InvalidInput("net_init: plan needs an input, an encoder and a head ending in one channel");
    for (int p : plan.pool_after)
        if (p < 1 || p > static_cast<int>(plan.encoder.size()))
            throw InvalidInput("net_init: pool position outside the encoder");
    std::vector<int> widths = plan.encoder;
    widths.insert(widths.end(), plan.head.begin(), plan.head.end());
    for (int w : widths)
        if (w < 1) throw InvalidInput("net_init: channel counts must be positive");

    std::mt19937_64 rng(seed);
    ConvNet<Scalar> net;
    net.plan = plan;
    int in = plan.input;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        ConvLayer<Scalar> layer;
        layer.in_channels = in;
        layer.out_channels = widths[i];
        layer.relu = i + 1 < widths.size();
        layer.pool_after = std::find(plan.pool_after.begin(), plan.pool_after.end(), static_cast<int>(i) + 1) !=
                           plan.pool_after.end();
        const double limit = std::sqrt(6.0 / (9.0 * in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        layer.params.weights.resize(widths[i], static_cast<Eigen::Index>(in) * 9);
        for (Eigen::Index k = 0; k < layer.params.weights.size(); ++k)
            layer.params.weights.data()[k] = static_cast<Scalar>(dist(rng));
        layer.params.bias = Vec<Scalar>::Zero(widths[i]);
        net.layers.push_back(std::move(layer));
        in = widths[i];
    }
    return net;
}

namespace detail {

template <typename Scalar>
Mat<Scalar> im2col(const Tensor<Scalar>& x) {
    const int h = x.height;
    const int w = x.width;
    Mat<Scalar> cols = Mat<Scalar>::Zero(static_cast<Eigen::Index>(x.channels) * 9, static_cast<Eigen::Index>(h) * w);
    for (int c = 0; c < x.channels; ++c) {
        const Scalar* src = x.data.row(c).data();
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                Scalar* dst = cols.row(c * 9 + ky * 3 + kx).data();
                for (int y = 0; y < h; ++y) {
                    const int yy = y + ky - 1;
                    if (yy < 0 || yy >= h) continue;
                    const int x_lo = std::max(0, 1 - kx);
                    const int x_hi = std::min(w, w + 1 - kx);
                    for (int xo = x_lo; xo < x_hi; ++xo) dst[y * w + xo] = src[yy * w + xo + kx - 1];
                }
            }
        }
    }
    return cols;
}

template <typename Scalar>
Tensor<Scalar> col2im(const Mat<Scalar>& cols, int channels, int h, int w) {
    Tensor<Scalar> x = Tensor<Scalar>::zeros(channels, h, w);
    for (int c = 0; c < channels; ++c) {
        Scalar* dst = x.data.row(c).data();
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const Scalar* src = cols.row(c * 9 + ky * 3 + kx).data();
                for (int y = 0; y < h; ++y) {
                    const int yy = y + ky - 1;
                    if (yy < 0 || yy >= h) continue;
                    const int x_lo = std::max(0, 1 - kx);
                    const int x_hi = std::min(w, w + 1 - kx);
                    for (int xo = x_lo; xo < x_hi; ++xo) dst[yy * w + xo + kx - 1] += src[y * w + xo];
                }
            }
        }
    }
    return x;
}

template <typename Scalar>
Tensor<Scalar> max_pool(const Tensor<Scalar>& x, std::vector<Eigen::Index>* argmax) {
    const int h = x.height / 2;
    const int w = x.width / 2;
    Tensor<Scalar> out = Tensor<Scalar>::zeros(x.channels, h, w);
    if (argmax) argmax->assign(static_cast<std::size_t>(x.channels) * h * w, 0);
    for (int c = 0; c < x.channels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int xo = 0; xo < w; ++xo) {
                Eigen::Index best = static_cast<Eigen::Index>(2 * y) * x.width + 2 * xo;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const Eigen::Index i = static_cast<Eigen::Index>(2 * y + dy) * x.width + 2 * xo + dx;
                        if (x.data(c, i) > x.data(c, best)) best = i;
                    }
                out.at(c, y, xo) = x.data(c, best);
                if (argmax) (*argmax)[(static_cast<std::size_t>(c) * h + y) * w + xo] = best;
            }
        }
    }
    return out;
}

}  // namespace detail

template <typename Scalar>
struct LayerCache {
    Mat<Scalar> cols;
    Mat<Scalar> pre;  // pre-activation, out x (h * w)
    int height = 0;
    int width = 0;
    std::vector<Eigen::Index> pool_argmax;
};

template <typename Scalar>
using ForwardCache = std::vector<LayerCache<Scalar>>;

/// Raw network output: one channel at 1/downsample of the input resolution.
template <typename Scalar>
Tensor<Scalar> forward(const ConvNet<Scalar>& net, const Tensor<Scalar>& input, ForwardCache<Scalar>* cache = nullptr) {
    const int ds = net.plan.downsample();
    if (input.channels != net.plan.input) throw InvalidInput("forward: input channel count does not match the net");
    if (input.height % ds != 0 || input.width % ds != 0 || input.height < ds || input.width < ds)
        throw InvalidInput("forward: crop dimensions must be positive multiples of " + std::to_string(ds));
    if (cache) cache->assign(net.layers.size(), {});

    Tensor<Scalar> x = input;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const ConvLayer<Scalar>& layer = net.layers[li];
        Mat<Scalar> cols = detail::im2col(x);
        Tensor<Scalar> y;
        y.channels = layer.out_channels;
        y.height = x.height;
        y.width = x.width;
        y.data.noalias() = layer.params.weights * cols;
        y.data.colwise() += layer.params.bias;
        if (!y.data.allFinite())
            throw NumericalError("forward: non-finite activation in layer " + std::to_string(li), static_cast<int>(li));
        if (cache) {
            (*cache)[li].cols = std::move(cols);
            (*cache)[li].pre = y.data;
            (*cache)[li].height = y.height;
            (*cache)[li].width = y.width;
        }
        if (layer.relu) y.data = y.data.cwiseMax(Scalar(0));
        if (layer.pool_after) y = detail::max_pool(y, cache ? &(*cache)[li].pool_argmax : nullptr);
        x = std::move(y);
    }
    return x;
}

/// Bilinear resize of a single-channel map by an integer factor, pixel-center aligned.
template <typename Scalar>
Eigen::ArrayXXd upsample(const Tensor<Scalar>& raw, int factor) {
    const int h = raw.height * factor;
    const int w = raw.width * factor;
    Eigen::ArrayXXd out(h, w);
    for (int y = 0; y < h; ++y) {
        const double sy = std::clamp((y + 0.5) / factor - 0.5, 0.0, raw.height - 1.0);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, raw.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < w; ++x) {
            const double sx = std::clamp((x + 0.5) / factor - 0.5, 0.0, raw.width - 1.0);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, raw.width - 1);
            const double fx = sx - x0;
            const double top = (1 - fx) * raw.at(0, y0, x0) + fx * raw.at(0, y0, x1);
            const double bot = (1 - fx) * raw.at(0, y1, x0) + fx * raw.at(0, y1, x1);
            out(y, x) = (1 - fy) * top + fy * bot;
        }
    }
    return out;
}

/// Crop coordinate -> nearest output pixel for a net with the given downsampling.
inline int to_output_pixel(double crop_coord, int factor) {
    return static_cast<int>(std::lround((crop_coord + 0.5) / factor - 0.5));
}

/// Default disc radius at output resolution: max(2, 5% of the crop side) / factor.
inline double default_target_radius(int crop_side, int factor) {
    return std::max(2.0, 0.05 * crop_side) / factor;
}

/// Binary disc: 1 within `radius` output pixels of the output pixel nearest to
/// `center` (crop coordinates), 0 elsewhere; clipped at the border.
template <typename Scalar>
Mat<Scalar> make_target(const Point& center, double radius, int out_width, int out_height, int factor) {
    const int cx = to_output_pixel(center.x, factor);
    const int cy = to_output_pixel(center.y, factor);
    if (cx < 0 || cy < 0 || cx >= out_width || cy >= out_height)
        throw InvalidInput("make_target: center outside the map");
    Mat<Scalar> t = Mat<Scalar>::Zero(out_height, out_width);
    for (int y = 0; y < out_height; ++y)
        for (int x = 0; x < out_width; ++x)
            if (std::hypot(x - cx, y - cy) <= radius) t(y, x) = Scalar(1);
    return t;
}

enum class SampleSource { InitialFrame, Hcf };

template <typename Scalar>
struct TrainSample {
    Tensor<Scalar> input;
    Mat<Scalar> target;  // output resolution
    Point center;        // crop coordinates of the stamped center
    double radius = 1.0;
    int frame = 0;
    SampleSource source = SampleSource::InitialFrame;
};

template <typename Scalar>
TrainSample<Scalar> make_sample(Tensor<Scalar> input, const Point& center, double radius, int factor, int frame,
                                SampleSource source) {
    TrainSample<Scalar> s;
    s.target = make_target<Scalar>(center, radius, input.width / factor, input.height / factor, factor);
    s.input = std::move(input);
    s.center = center;
    s.radius = radius;
    s.frame = frame;
    s.source = source;
    return s;
}

template <typename Scalar>
struct LossResult {
    double loss = 0.0;
    Gradients<Scalar> gradients;
};

/// Mean squared error over output pixels and its exact gradient.
template <typename Scalar>
LossResult<Scalar> loss_and_backward(const ConvNet<Scalar>& net, const Tensor<Scalar>& input, const Mat<Scalar>& target) {
    ForwardCache<Scalar> cache;
    const Tensor<Scalar> out = forward(net, input, &cache);
    if (target.rows() != out.height || target.cols() != out.width)
        throw InvalidInput("loss_and_backward: target shape does not match the output");

    const Eigen::Map<const Vec<Scalar>> tflat(target.data(), target.size());
    const Vec<Scalar> diff = out.data.row(0).transpose() - tflat;
    const auto n = static_cast<Scalar>(diff.size());
    LossResult<Scalar> res;
    res.loss = static_cast<double>(diff.squaredNorm() / n);
    res.gradients = zero_like(net);

    Mat<Scalar> grad = (Scalar(2) / n) * diff.transpose();  // 1 x (h * w)
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const ConvLayer<Scalar>& layer = net.layers[li];
        const LayerCache<Scalar>& lc = cache[li];
        if (layer.pool_after) {
            const int hp = lc.height / 2;
            const int wp = lc.width / 2;
            Mat<Scalar> unpooled = Mat<Scalar>::Zero(layer.out_channels, static_cast<Eigen::Index>(lc.height) * lc.width);
            for (int c = 0; c < layer.out_channels; ++c)
                for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(hp) * wp; ++i)
                    unpooled(c, lc.pool_argmax[static_cast<std::size_t>(c) * hp * wp + i]) += grad(c, i);
            grad = std::move(unpooled);
        }
        if (layer.relu) grad = grad.cwiseProduct((lc.pre.array() > Scalar(0)).template cast<Scalar>().matrix());
        res.gradients[li].weights.noalias() = grad * lc.cols.transpose();
        res.gradients[li].bias = grad.rowwise().sum();
        if (li > 0) {
            const Mat<Scalar> dcols = layer.params.weights.transpose() * grad;
            grad = detail::col2im(dcols, layer.in_channels, lc.height, lc.width).data;
        }
    }
    return res;
}

template <typename Scalar>
LossResult<Scalar> loss_and_backward(const ConvNet<Scalar>& net, const TrainSample<Scalar>& sample) {
    return loss_and_backward(net, sample.input, sample.target);
}

struct AdamConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename Scalar>
struct AdamState {
    AdamConfig cfg;
    Gradients<Scalar> m;
    Gradients<Scalar> v;
    long step = 0;

    static AdamState for_net(const ConvNet<Scalar>& net, const AdamConfig& cfg = {}) {
        AdamState s;
        s.cfg = cfg;
        s.m = zero_like(net);
        s.v = zero_like(net);
        return s;
    }
};

/// Bias-corrected Adam update.
template <typename Scalar>
void adam_step(ConvNet<Scalar>& net, AdamState<Scalar>& state, const Gradients<Scalar>& grads) {
    if (grads.size() != net.layers.size() || state.m.size() != net.layers.size())
        throw InvalidInput("adam_step: gradient layout does not match the net");
    ++state.step;
    const double b1 = state.cfg.beta1;
    const double b2 = state.cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const auto lr = static_cast<Scalar>(state.cfg.lr);
    const auto eps = static_cast<Scalar>(state.cfg.eps);
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        if (g.size() != param.size()) throw InvalidInput("adam_step: gradient shape mismatch");
        m = Scalar(b1) * m + Scalar(1 - b1) * g;
        v = Scalar(b2) * v + Scalar(1 - b2) * g.cwiseAbs2();
        param.array() -= lr * (m.array() / Scalar(c1)) / ((v.array() / Scalar(c2)).sqrt() + eps);
    };
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        update(net.layers[i].params.weights, state.m[i].weights, state.v[i].weights, grads[i].weights);
        update(net.layers[i].params.bias, state.m[i].bias, state.v[i].bias, grads[i].bias);
    }
}

/// Translates input and stamp by (sx, sy) crop pixels, replicating edges.
template <typename Scalar>
TrainSample<Scalar> shift_sample(const TrainSample<Scalar>& s, int sx, int sy, int factor) {
    Tensor<Scalar> moved = Tensor<Scalar>::zeros(s.input.channels, s.input.height, s.input.width);
    for (int y = 0; y < s.input.height; ++y) {
        const int srcy = std::clamp(y - sy, 0, s.input.height - 1);
        for (int x = 0; x < s.input.width; ++x) {
            const int srcx = std::clamp(x - sx, 0, s.input.width - 1);
            moved.data.col(static_cast<Eigen::Index>(y) * s.input.width + x) =
                s.input.data.col(static_cast<Eigen::Index>(srcy) * s.input.width + srcx);
        }
    }
    Point c{std::clamp(s.center.x + sx, 0.0, s.input.width - 1.0), std::clamp(s.center.y + sy, 0.0, s.input.height - 1.0)};
    return make_sample(std::move(moved), c, s.radius, factor, s.frame, s.source);
}

/// Two copies of the sample, each shifted by an independent uniform offset of
/// at most `max_shift` pixels per axis.
template <typename Scalar>
std::vector<TrainSample<Scalar>> augment_shift(const TrainSample<Scalar>& s, int max_shift, int factor, std::mt19937_64& rng) {
    if (max_shift < 0 || max_shift * 4 >= std::min(s.input.width, s.input.height))
        throw InvalidInput("augment_shift: shift bound must stay below a quarter of the crop");
    std::uniform_int_distribution<int> off(-max_shift, max_shift);
    std::vector<TrainSample<Scalar>> out;
    for (int i = 0; i < 2; ++i) {
        const int sx = off(rng);
        const int sy = off(rng);
        out.push_back(shift_sample(s, sx, sy, factor));
    }
    return out;
}

/// `epochs` passes of batch-size-1 Adam over a seeded shuffle of `samples`.
/// Returns the mean loss of each epoch.
template <typename Scalar>
std::vector<double> train_epochs(ConvNet<Scalar>& net, AdamState<Scalar>& adam,
                                 const std::vector<TrainSample<Scalar>>& samples, int epochs, std::mt19937_64& rng) {
    if (samples.empty()) throw InvalidInput("train_epochs: empty sample set");
    std::vector<double> losses;
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    for (int e = 0; e < epochs; ++e) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(order[i - 1], order[pick(rng)]);
        }
        double total = 0.0;
        for (std::size_t idx : order) {
            LossResult<Scalar> r = loss_and_backward(net, samples[idx]);
            adam_step(net, adam, r.gradients);
            total += r.loss;
        }
        losses.push_back(total / static_cast<double>(samples.size()));
    }
    return losses;
}

}  // namespace cotrack::convnet
