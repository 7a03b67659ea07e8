#pragma once

#include <algorithm>
#include <cmath>

namespace cotrack {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axis-aligned box, top-left corner plus size, in pixels.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    Point center() const { return {x + 0.5 * w, y + 0.5 * h}; }
    double area() const { return w * h; }
    static Box centered(const Point& c, double w, double h) {
        return {c.x - 0.5 * w, c.y - 0.5 * h, w, h};
    }

    friend bool operator==(const Box&, const Box&) = default;
};

/// Intersection over union; 0 when either box is empty.
inline double iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace cotrack
