#include "cotrack/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cotrack/error.hpp"

namespace cotrack {

namespace {

double sample_bilinear(const Image& img, double x, double y, int c) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = (1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bottom = (1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    return (1 - fy) * top + fy * bottom;
}

}  // namespace

SearchCrop crop_square(const Image& img, const Point& center, double frame_side, int side) {
    if (img.empty()) throw InvalidInput("crop: empty image");
    if (!(frame_side > 0.0) || side <= 0) throw InvalidInput("crop: degenerate region");
    SearchCrop out;
    out.map.scale = frame_side / side;
    out.map.origin_x = center.x - out.map.scale * side / 2.0;
    out.map.origin_y = center.y - out.map.scale * side / 2.0;
    out.image = Image(side, side, img.channels);

    const bool integral = out.map.scale == 1.0 && out.map.origin_x == std::floor(out.map.origin_x) &&
                          out.map.origin_y == std::floor(out.map.origin_y);
    for (int v = 0; v < side; ++v) {
        for (int u = 0; u < side; ++u) {
            const Point p = out.map.to_frame({static_cast<double>(u), static_cast<double>(v)});
            for (int c = 0; c < img.channels; ++c) {
                if (integral) {
                    const int x = std::clamp(static_cast<int>(p.x), 0, img.width - 1);
                    const int y = std::clamp(static_cast<int>(p.y), 0, img.height - 1);
                    out.image.at(u, v, c) = img.at(x, y, c);
                } else {
                    const double s = sample_bilinear(img, p.x, p.y, c);
                    out.image.at(u, v, c) = static_cast<std::uint8_t>(std::clamp(std::lround(s), 0L, 255L));
                }
            }
        }
    }
    return out;
}

SearchCrop crop_search_region(const Image& img, const Point& center, double box_w, double box_h,
                              double s_search) {
    if (!(box_w > 0.0) || !(box_h > 0.0)) throw InvalidInput("crop_search_region: degenerate box");
    if (!(s_search > 0.0)) throw InvalidInput("crop_search_region: s_search must be positive");
    const int side = static_cast<int>(std::lround(s_search * std::max(box_w, box_h)));
    return crop_square(img, center, static_cast<double>(side), side);
}

FeatureStack extract_channels(const Image& img, const FeatureConfig& cfg) {
    if (img.width < 16 || img.height < 16) throw InvalidInput("extract_channels: image smaller than 16x16");
    if (cfg.orientation_bins < 1) throw InvalidInput("extract_channels: need at least one orientation bin");

    const int w = img.width;
    const int h = img.height;
    const int bins = cfg.orientation_bins;
    FeatureStack fs;
    fs.width = w;
    fs.height = h;
    fs.depth = 3 + bins;
    fs.values = RowMatrixXd::Zero(static_cast<Eigen::Index>(w) * h, fs.depth);

    Eigen::ArrayXXd gray(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) gray(y, x) = img.gray(x, y) / 255.0;

    const double bin_width = std::numbers::pi / bins;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = 0.5 * (gray(y, std::min(x + 1, w - 1)) - gray(y, std::max(x - 1, 0)));
            const double gy = 0.5 * (gray(std::min(y + 1, h - 1), x) - gray(std::max(y - 1, 0), x));
            auto row = fs.values.row(static_cast<Eigen::Index>(y) * w + x);
            row[FeatureStack::kGray] = gray(y, x);
            row[FeatureStack::kGradX] = gx;
            row[FeatureStack::kGradY] = gy;
            const double mag = std::hypot(gx, gy);
            if (mag == 0.0) continue;
            // unsigned orientation, soft-assigned to the two nearest bin centers
            double theta = std::atan2(gy, gx);
            if (theta < 0) theta += std::numbers::pi;
            const double pos = theta / bin_width - 0.5;
            const double lo = std::floor(pos);
            const double frac = pos - lo;
            const int b0 = ((static_cast<int>(lo) % bins) + bins) % bins;
            const int b1 = (b0 + 1) % bins;
            row[3 + b0] += mag * (1.0 - frac);
            row[3 + b1] += mag * frac;
        }
    }

    fs.mean = fs.values.colwise().mean().transpose();
    fs.scale.resize(fs.depth);
    for (int c = 0; c < fs.depth; ++c) {
        auto col = fs.values.col(c);
        col.array() -= fs.mean[c];
        const double var = col.squaredNorm() / static_cast<double>(col.size());
        fs.scale[c] = std::sqrt(std::max(var, cfg.variance_floor));
        col /= fs.scale[c];
    }
    return fs;
}

FeatureStack shift_stack(const FeatureStack& stack, int sx, int sy) {
    FeatureStack out = stack;
    for (int y = 0; y < stack.height; ++y) {
        const int srcy = std::clamp(y - sy, 0, stack.height - 1);
        for (int x = 0; x < stack.width; ++x) {
            const int srcx = std::clamp(x - sx, 0, stack.width - 1);
            out.values.row(static_cast<Eigen::Index>(y) * stack.width + x) =
                stack.values.row(static_cast<Eigen::Index>(srcy) * stack.width + srcx);
        }
    }
    return out;
}

std::array<int, 3> default_scales(double box_w, double box_h) {
    const double base = std::min(box_w, box_h);
    std::array<int, 3> s{};
    const double fractions[3] = {0.25, 0.5, 1.0};
    for (int i = 0; i < 3; ++i) {
        int side = 2 * static_cast<int>(std::lround(base * fractions[i] / 2.0));
        side = std::max(side, 2);
        if (i > 0 && side <= s[i - 1]) side = s[i - 1] + 2;
        s[i] = side;
    }
    return s;
}

std::vector<PatchGeometry> propose_patches(const Box& box, int stride, const std::array<int, 3>& scales,
                                           int region_width, int region_height) {
    if (stride < 1) throw InvalidInput("propose_patches: stride must be >= 1");
    if (!(scales[0] > 0 && scales[0] < scales[1] && scales[1] < scales[2]))
        throw InvalidInput("propose_patches: scales must be positive and strictly increasing");

    std::vector<PatchGeometry> out;
    if (box.w < scales[0] || box.h < scales[0]) return out;

    const Point c = box.center();
    const int x0 = static_cast<int>(std::ceil(box.x));
    const int y0 = static_cast<int>(std::ceil(box.y));
    for (int gy = y0; gy < box.y + box.h; gy += stride) {
        for (int gx = x0; gx < box.x + box.w; gx += stride) {
            for (int si = 0; si < 3; ++si) {
                PatchGeometry g;
                g.cx = gx;
                g.cy = gy;
                g.side = scales[si];
                g.scale_index = si;
                g.dx = gx - c.x;
                g.dy = gy - c.y;
                if (g.inside(region_width, region_height)) out.push_back(g);
            }
        }
    }
    return out;
}

namespace {

void require_inside(const FeatureStack& stack, const PatchGeometry& g, const char* who) {
    if (g.side <= 0 || !g.inside(stack.width, stack.height))
        throw InvalidInput(std::string(who) + ": patch outside the feature stack");
}

}  // namespace

Eigen::VectorXd vectorize_patch(const FeatureStack& stack, const PatchGeometry& g) {
    require_inside(stack, g, "vectorize_patch");
    const Eigen::Index row_len = static_cast<Eigen::Index>(g.side) * stack.depth;
    Eigen::VectorXd d(row_len * g.side);
    for (int r = 0; r < g.side; ++r) {
        const double* src = stack.values.data() +
                            (static_cast<Eigen::Index>(g.top() + r) * stack.width + g.left()) * stack.depth;
        std::copy(src, src + row_len, d.data() + r * row_len);
    }
    const double n = d.norm();
    if (n > 0.0) d /= n;
    return d;
}

double edge_density(const FeatureStack& stack, const PatchGeometry& g) {
    require_inside(stack, g, "edge_density");
    if (stack.depth < 3) throw InvalidInput("edge_density: stack has no gradient channels");
    double sum = 0.0;
    for (int y = g.top(); y < g.top() + g.side; ++y)
        for (int x = g.left(); x < g.left() + g.side; ++x)
            sum += std::hypot(stack.raw(x, y, FeatureStack::kGradX), stack.raw(x, y, FeatureStack::kGradY));
    return sum / (static_cast<double>(g.side) * g.side);
}

RowMatrixXd patch_matrix(const FeatureStack& stack, int side) {
    if (side <= 0 || side > stack.width || side > stack.height)
        throw InvalidInput("patch_matrix: window larger than stack");
    const int nx = stack.width - side + 1;
    const int ny = stack.height - side + 1;
    const Eigen::Index row_len = static_cast<Eigen::Index>(side) * stack.depth;
    RowMatrixXd out(static_cast<Eigen::Index>(nx) * ny, row_len * side);
    for (int v = 0; v < ny; ++v) {
        for (int u = 0; u < nx; ++u) {
            double* dst = out.data() + (static_cast<Eigen::Index>(v) * nx + u) * out.cols();
            for (int r = 0; r < side; ++r) {
                const double* src =
                    stack.values.data() + (static_cast<Eigen::Index>(v + r) * stack.width + u) * stack.depth;
                std::copy(src, src + row_len, dst + r * row_len);
            }
        }
    }
    return out;
}

Eigen::VectorXd patch_norms(const FeatureStack& stack, int side) {
    if (side <= 0 || side > stack.width || side > stack.height)
        throw InvalidInput("patch_norms: window larger than stack");
    // summed-area table of per-pixel squared norms
    const int w = stack.width;
    const int h = stack.height;
    Eigen::ArrayXXd sat = Eigen::ArrayXXd::Zero(h + 1, w + 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            sat(y + 1, x + 1) = stack.values.row(static_cast<Eigen::Index>(y) * w + x).squaredNorm() +
                                sat(y, x + 1) + sat(y + 1, x) - sat(y, x);
    const int nx = w - side + 1;
    const int ny = h - side + 1;
    Eigen::VectorXd out(static_cast<Eigen::Index>(nx) * ny);
    for (int v = 0; v < ny; ++v)
        for (int u = 0; u < nx; ++u) {
            const double s = sat(v + side, u + side) - sat(v, u + side) - sat(v + side, u) + sat(v, u);
            out[static_cast<Eigen::Index>(v) * nx + u] = std::sqrt(std::max(s, 0.0));
        }
    return out;
}

}  // namespace cotrack
