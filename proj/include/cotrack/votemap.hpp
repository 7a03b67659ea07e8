#pragma once

#include <Eigen/Dense>

#include "cotrack/geometry.hpp"

namespace cotrack {

enum class MapKind { FilterParts, ConvNet, Fused, Mask };

/// Dense 2-D evidence map, indexed values(y, x).
struct VoteMap {
    Eigen::ArrayXXd values;
    MapKind kind = MapKind::Fused;

    VoteMap() = default;
    VoteMap(int width, int height, MapKind k) : values(Eigen::ArrayXXd::Zero(height, width)), kind(k) {}

    int width() const { return static_cast<int>(values.cols()); }
    int height() const { return static_cast<int>(values.rows()); }
    double at(int x, int y) const { return values(y, x); }
    double& at(int x, int y) { return values(y, x); }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width() && y < height(); }
};

struct Peak {
    int x = 0;
    int y = 0;
    double value = 0.0;
};

/// First maximum in row-major order.
Peak argmax(const VoteMap& map);

/// Separable 3-parabola sub-pixel refinement around an integer peak.
Point refine_peak(const VoteMap& map, const Peak& peak);

/// Separable Gaussian blur with zero padding; kernel radius ceil(3 sigma).
VoteMap gaussian_smooth(const VoteMap& map, double sigma);

/// Divides by the maximum when it is positive.
void normalize_max(VoteMap& map);

}  // namespace cotrack
