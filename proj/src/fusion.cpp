#include "cotrack/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "cotrack/error.hpp"

namespace cotrack {

VoteMap uncertainty_mask(const Point& prev_center, int width, int height, double sigma_mask) {
    if (!(sigma_mask > 0.0)) throw InvalidInput("uncertainty_mask: sigma must be positive");
    VoteMap m(width, height, MapKind::Mask);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            m.at(x, y) = std::exp(-std::hypot(x - prev_center.x, y - prev_center.y) / sigma_mask);
    return m;
}

VoteMap fuse(const VoteMap& filter_map, const VoteMap& net_map, const VoteMap& mask, double alpha) {
    if (filter_map.values.rows() != mask.values.rows() || filter_map.values.cols() != mask.values.cols() ||
        net_map.values.rows() != mask.values.rows() || net_map.values.cols() != mask.values.cols())
        throw InvalidInput("fuse: map shapes differ");
    VoteMap p;
    p.kind = MapKind::Fused;
    p.values = (alpha * filter_map.values + (1.0 - alpha) * net_map.values) * mask.values;
    return p;
}

CenterPick pick_center(const VoteMap& fused, const Point& prev_center) {
    CenterPick pick{prev_center, true};
    double best = 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int y = 0; y < fused.height(); ++y) {
        for (int x = 0; x < fused.width(); ++x) {
            const double v = fused.at(x, y);
            if (!(v > 0.0)) continue;
            const double d = std::hypot(x - prev_center.x, y - prev_center.y);
            if (pick.degenerate || v > best || (v == best && d < best_dist)) {
                best = v;
                best_dist = d;
                pick = {{static_cast<double>(x), static_cast<double>(y)}, false};
            }
        }
    }
    return pick;
}

double percentile_value(std::vector<double> values, double percentile) {
    if (values.empty()) throw InvalidInput("percentile_value: empty input");
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

bool hcf_gate(std::vector<double>& history, double distance, double percentile, int min_history) {
    history.push_back(distance);
    if (static_cast<int>(history.size()) < min_history) return false;
    return distance <= percentile_value(history, percentile);
}

bool fit_affine(const std::vector<Correspondence>& matches, double (&a)[2][2], double (&t)[2]) {
    if (matches.size() < 3) return false;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& m : matches) mean += Eigen::Vector2d(m.expected.x, m.expected.y);
    mean /= static_cast<double>(matches.size());
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (const auto& m : matches) {
        const Eigen::Vector2d d = Eigen::Vector2d(m.expected.x, m.expected.y) - mean;
        scatter += d * d.transpose();
    }
    scatter /= static_cast<double>(matches.size());
    if (Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(scatter).eigenvalues().minCoeff() < 0.25) return false;

    // rows [x y 1] -> actual, solved for both output coordinates at once
    Eigen::MatrixXd lhs(static_cast<Eigen::Index>(matches.size()), 3);
    Eigen::MatrixXd rhs(static_cast<Eigen::Index>(matches.size()), 2);
    for (std::size_t i = 0; i < matches.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        lhs.row(r) << matches[i].expected.x - mean.x(), matches[i].expected.y - mean.y(), 1.0;
        rhs.row(r) << matches[i].actual.x, matches[i].actual.y;
    }
    const Eigen::MatrixXd sol = lhs.colPivHouseholderQr().solve(rhs);  // 3 x 2
    a[0][0] = sol(0, 0);
    a[0][1] = sol(1, 0);
    a[1][0] = sol(0, 1);
    a[1][1] = sol(1, 1);
    t[0] = sol(2, 0) - a[0][0] * mean.x() - a[0][1] * mean.y();
    t[1] = sol(2, 1) - a[1][0] * mean.x() - a[1][1] * mean.y();
    return true;
}

namespace {

// Rejects fits that squash or blow up the box; those come from scattered
// matches and fall back to the translation update.
bool plausible_affine(const double (&a)[2][2]) {
    Eigen::Matrix2d m;
    m << a[0][0], a[0][1], a[1][0], a[1][1];
    const Eigen::Vector2d sv = Eigen::JacobiSVD<Eigen::Matrix2d>(m).singularValues();
    return sv[1] > 0.0 && sv[0] / sv[1] <= kMaxAnisotropy && sv[0] <= kMaxScale && sv[1] >= 1.0 / kMaxScale;
}

}  // namespace

Box estimate_box(const std::vector<Correspondence>& matches, const Box& prev_box, const Point& new_center,
                 int frame_width, int frame_height) {
    Box box = Box::centered(new_center, prev_box.w, prev_box.h);
    double a[2][2];
    double t[2];
    if (fit_affine(matches, a, t) && plausible_affine(a)) {
        // Edge midpoints rather than corners: bounding rotated corners would
        // inflate the box under any shear in the fit.
        const Point c = box.center();
        const Point mids[4] = {{box.x, c.y}, {box.x + box.w, c.y}, {c.x, box.y}, {c.x, box.y + box.h}};
        double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
        double x1 = -x0, y1 = -x0;
        for (const Point& p : mids) {
            const double u = a[0][0] * p.x + a[0][1] * p.y + t[0];
            const double v = a[1][0] * p.x + a[1][1] * p.y + t[1];
            x0 = std::min(x0, u);
            x1 = std::max(x1, u);
            y0 = std::min(y0, v);
            y1 = std::max(y1, v);
        }
        box = {x0, y0, x1 - x0, y1 - y0};
    } else if (!matches.empty()) {
        double sx = 0.0, sy = 0.0;
        for (const auto& m : matches) {
            sx += m.actual.x - m.expected.x;
            sy += m.actual.y - m.expected.y;
        }
        box.x += sx / static_cast<double>(matches.size());
        box.y += sy / static_cast<double>(matches.size());
    }

    // clip to the frame, keeping at least one pixel
    const double fw = frame_width;
    const double fh = frame_height;
    double x0 = std::clamp(box.x, 0.0, fw - 1.0);
    double y0 = std::clamp(box.y, 0.0, fh - 1.0);
    double x1 = std::clamp(box.x + box.w, x0 + 1.0, fw);
    double y1 = std::clamp(box.y + box.h, y0 + 1.0, fh);
    return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace cotrack
