#pragma once

#include <vector>

#include "cotrack/geometry.hpp"
#include "cotrack/votemap.hpp"

namespace cotrack {

/// exp(-|p - prev| / sigma) over a width x height grid.
VoteMap uncertainty_mask(const Point& prev_center, int width, int height, double sigma_mask);

/// (alpha F + (1 - alpha) C) * M, pixelwise.
VoteMap fuse(const VoteMap& filter_map, const VoteMap& net_map, const VoteMap& mask, double alpha);

struct CenterPick {
    Point center;
    bool degenerate = false;  // map was identically zero; center is the previous one
};

/// Argmax of the fused map; ties go to the pixel nearest `prev_center`, then
/// the first in row-major order.
CenterPick pick_center(const VoteMap& fused, const Point& prev_center);

/// Value at the nearest-rank `percentile` of `values` (unsorted).
double percentile_value(std::vector<double> values, double percentile);

/// Appends `distance` to the history and reports whether it lies within the
/// lowest `percentile` of everything seen so far. Always false until the
/// history holds `min_history` entries.
bool hcf_gate(std::vector<double>& history, double distance, double percentile = 0.11, int min_history = 20);

struct Correspondence {
    Point expected;  // where the part should be given the chosen center
    Point actual;    // where its classifier actually peaked
};

/// Least-squares 2-D affine fit actual ~ A * expected + t. Returns false when
/// the expected points are degenerate (fewer than 3 or collinear).
bool fit_affine(const std::vector<Correspondence>& matches, double (&a)[2][2], double (&t)[2]);

// Affine fits whose singular values differ by more than kMaxAnisotropy, or
// scale by more than kMaxScale either way, are treated as degenerate.
inline constexpr double kMaxAnisotropy = 1.5;
inline constexpr double kMaxScale = 2.0;

/// Previous box size re-centered on `new_center`, then moved by the affine fit
/// of the correspondences (translation only for 1-2 matches or an implausible
/// fit): the box edge midpoints are mapped and bounded, then clipped to the frame.
Box estimate_box(const std::vector<Correspondence>& matches, const Box& prev_box, const Point& new_center,
                 int frame_width, int frame_height);

}  // namespace cotrack
