#include "cotrack/convnet_io.hpp"

#include <fstream>

#include "cotrack/binary_io.hpp"

namespace cotrack::convnet {

Tensor<float> to_tensor(const FeatureStack& stack) {
    Tensor<float> t;
    t.channels = stack.depth;
    t.height = stack.height;
    t.width = stack.width;
    t.data = stack.values.transpose().cast<float>();
    return t;
}

namespace {
constexpr std::uint32_t kVersion = 1;
}

void write_weights(std::ostream& out, const ConvNet<float>& net) {
    binio::put_magic(out, "CTNW");
    binio::put_u32(out, kVersion);
    binio::put_u32(out, static_cast<std::uint32_t>(net.plan.input));
    binio::put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    binio::put_u32(out, static_cast<std::uint32_t>(net.plan.encoder.size()));
    for (const auto& l : net.layers) {
        binio::put_u32(out, static_cast<std::uint32_t>(l.in_channels));
        binio::put_u32(out, static_cast<std::uint32_t>(l.out_channels));
        binio::put_u32(out, 3);
        binio::put_u32(out, (l.relu ? 1u : 0u) | (l.pool_after ? 2u : 0u));
    }
    for (const auto& l : net.layers) {
        for (Eigen::Index i = 0; i < l.params.weights.size(); ++i) binio::put_f32(out, l.params.weights.data()[i]);
        for (Eigen::Index i = 0; i < l.params.bias.size(); ++i) binio::put_f32(out, l.params.bias[i]);
    }
    if (!out) throw InvalidInput("write_weights: stream error");
}

ConvNet<float> read_weights(std::istream& in) {
    binio::expect_magic(in, "CTNW");
    if (binio::get_u32(in) != kVersion) throw InvalidInput("read_weights: unsupported version");
    ConvNet<float> net;
    net.plan.input = static_cast<int>(binio::get_u32(in));
    const std::uint32_t count = binio::get_u32(in);
    const std::uint32_t encoder_len = binio::get_u32(in);
    if (count == 0 || count > 1024 || encoder_len > count)
        throw InvalidInput("read_weights: implausible layer count");
    net.plan.encoder.clear();
    net.plan.head.clear();
    net.plan.pool_after.clear();
    int prev = net.plan.input;
    for (std::uint32_t i = 0; i < count; ++i) {
        ConvLayer<float> l;
        l.in_channels = static_cast<int>(binio::get_u32(in));
        l.out_channels = static_cast<int>(binio::get_u32(in));
        const std::uint32_t kernel = binio::get_u32(in);
        const std::uint32_t flags = binio::get_u32(in);
        if (kernel != 3 || l.in_channels != prev || l.out_channels < 1 || l.out_channels > 4096)
            throw InvalidInput("read_weights: inconsistent layer header");
        l.relu = (flags & 1u) != 0;
        l.pool_after = (flags & 2u) != 0;
        l.params.weights.resize(l.out_channels, static_cast<Eigen::Index>(l.in_channels) * 9);
        l.params.bias.resize(l.out_channels);
        prev = l.out_channels;
        net.layers.push_back(std::move(l));
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (net.layers[i].pool_after) net.plan.pool_after.push_back(static_cast<int>(i) + 1);
        (i < encoder_len ? net.plan.encoder : net.plan.head).push_back(net.layers[i].out_channels);
    }
    for (auto& l : net.layers) {
        for (Eigen::Index i = 0; i < l.params.weights.size(); ++i) l.params.weights.data()[i] = binio::get_f32(in);
        for (Eigen::Index i = 0; i < l.params.bias.size(); ++i) l.params.bias[i] = binio::get_f32(in);
    }
    return net;
}

void save_weights(const std::filesystem::path& path, const ConvNet<float>& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    write_weights(out, net);
}

ConvNet<float> load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return read_weights(in);
}

}  // namespace cotrack::convnet
