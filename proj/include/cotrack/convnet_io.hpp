#pragma once

#include <filesystem>
#include <iosfwd>

#include "cotrack/convnet.hpp"
#include "cotrack/features.hpp"

namespace cotrack::convnet {

/// Feature stack as a channels x (h * w) float tensor.
Tensor<float> to_tensor(const FeatureStack& stack);

/// Weight snapshot, little-endian. See docs/formats.md.
void write_weights(std::ostream& out, const ConvNet<float>& net);
ConvNet<float> read_weights(std::istream& in);
void save_weights(const std::filesystem::path& path, const ConvNet<float>& net);
ConvNet<float> load_weights(const std::filesystem::path& path);

}  // namespace cotrack::convnet
