#include "cotrack/votemap.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cotrack/error.hpp"

namespace cotrack {

Peak argmax(const VoteMap& map) {
    Peak best{0, 0, map.height() > 0 && map.width() > 0 ? map.at(0, 0) : 0.0};
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x)
            if (map.at(x, y) > best.value) best = {x, y, map.at(x, y)};
    return best;
}

namespace {

double parabola_offset(double left, double mid, double right) {
    const double denom = left - 2.0 * mid + right;
    if (denom >= 0.0) return 0.0;
    const double off = 0.5 * (left - right) / denom;
    return std::clamp(off, -0.5, 0.5);
}

}  // namespace

Point refine_peak(const VoteMap& map, const Peak& peak) {
    Point p{static_cast<double>(peak.x), static_cast<double>(peak.y)};
    if (peak.x > 0 && peak.x + 1 < map.width())
        p.x += parabola_offset(map.at(peak.x - 1, peak.y), peak.value, map.at(peak.x + 1, peak.y));
    if (peak.y > 0 && peak.y + 1 < map.height())
        p.y += parabola_offset(map.at(peak.x, peak.y - 1), peak.value, map.at(peak.x, peak.y + 1));
    return p;
}

VoteMap gaussian_smooth(const VoteMap& map, double sigma) {
    if (!(sigma > 0.0)) throw InvalidInput("gaussian_smooth: sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        total += kernel[i + radius];
    }
    for (double& k : kernel) k /= total;

    const int w = map.width();
    const int h = map.height();
    Eigen::ArrayXXd tmp = Eigen::ArrayXXd::Zero(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = x + i;
                if (xx >= 0 && xx < w) s += kernel[i + radius] * map.values(y, xx);
            }
            tmp(y, x) = s;
        }
    VoteMap out(w, h, map.kind);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = y + i;
                if (yy >= 0 && yy < h) s += kernel[i + radius] * tmp(yy, x);
            }
            out.values(y, x) = s;
        }
    return out;
}

void normalize_max(VoteMap& map) {
    if (map.values.size() == 0) return;
    const double m = map.values.maxCoeff();
    if (m > 0.0) map.values /= m;
}

}  // namespace cotrack
