#pragma once

// Hand-crafted feature channels over a search crop, and the patch geometry
// that part classifiers are learned on.

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "cotrack/geometry.hpp"
#include "cotrack/image.hpp"

namespace cotrack {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Maps crop (feature) pixel coordinates to frame coordinates:
/// frame = origin + scale * crop.
struct CoordinateMap {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double scale = 1.0;

    Point to_frame(const Point& p) const { return {origin_x + scale * p.x, origin_y + scale * p.y}; }
    Point to_crop(const Point& p) const { return {(p.x - origin_x) / scale, (p.y - origin_y) / scale}; }

    friend bool operator==(const CoordinateMap&, const CoordinateMap&) = default;
};

struct SearchCrop {
    Image image;
    CoordinateMap map;
};

/// Square crop of `side` output pixels covering `frame_side` frame pixels around
/// `center`. Out-of-frame samples replicate the nearest edge pixel.
SearchCrop crop_square(const Image& img, const Point& center, double frame_side, int side);

/// Square crop of side round(s_search * max(box_w, box_h)) at unit scale.
SearchCrop crop_search_region(const Image& img, const Point& center, double box_w, double box_h,
                              double s_search = 3.0);

struct FeatureConfig {
    int orientation_bins = 6;
    double variance_floor = 1e-6;
};

/// Multi-channel feature image. Storage is pixel-major: row y * width + x holds
/// the `depth` channel values of that pixel, so one patch row is contiguous.
struct FeatureStack {
    static constexpr int kGray = 0;
    static constexpr int kGradX = 1;
    static constexpr int kGradY = 2;

    int width = 0;
    int height = 0;
    int depth = 0;
    RowMatrixXd values;
    // stored = (raw - mean) / scale, per channel
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    CoordinateMap map;

    double at(int x, int y, int c) const { return values(static_cast<Eigen::Index>(y) * width + x, c); }
    double raw(int x, int y, int c) const { return at(x, y, c) * scale[c] + mean[c]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

/// Gray, x/y gradients and soft orientation bins, each standardized over the crop.
FeatureStack extract_channels(const Image& img, const FeatureConfig& cfg = {});

/// Copy of `stack` translated by (sx, sy) pixels with edge replication.
FeatureStack shift_stack(const FeatureStack& stack, int sx, int sy);

struct PatchGeometry {
    int cx = 0;  // patch center, feature pixels
    int cy = 0;
    int side = 0;
    int scale_index = 0;
    double dx = 0.0;  // displacement of the patch center from the object center
    double dy = 0.0;

    int left() const { return cx - side / 2; }
    int top() const { return cy - side / 2; }
    bool inside(int width, int height) const {
        return left() >= 0 && top() >= 0 && left() + side <= width && top() + side <= height;
    }
};

/// Patch sides {1/4, 1/2, 1} * min(w, h), rounded to even sizes, strictly increasing.
std::array<int, 3> default_scales(double box_w, double box_h);

/// Grid points at `stride` inside `box`; per point, one geometry per scale that
/// fits in the region, listed smallest first.
std::vector<PatchGeometry> propose_patches(const Box& box, int stride, const std::array<int, 3>& scales,
                                           int region_width, int region_height);

/// Row-major (y, x, channel) flatten of the patch, L2-normalized.
Eigen::VectorXd vectorize_patch(const FeatureStack& stack, const PatchGeometry& g);

/// Mean raw gradient magnitude over the patch.
double edge_density(const FeatureStack& stack, const PatchGeometry& g);

/// Every valid `side` x `side` window as a row (same layout as vectorize_patch,
/// not normalized). Row index is top * (width - side + 1) + left.
RowMatrixXd patch_matrix(const FeatureStack& stack, int side);

/// L2 norm of every valid window, same row order as patch_matrix.
Eigen::VectorXd patch_norms(const FeatureStack& stack, int side);

}  // namespace cotrack
