#include "cotrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cotrack/error.hpp"

namespace cotrack {

namespace {

using Plane = std::vector<double>;

// Seeded block noise, bilinearly interpolated between cell corners.
Plane smooth_noise(int w, int h, int cell, double lo, double hi, std::mt19937_64& rng) {
    const int gw = w / cell + 2;
    const int gh = h / cell + 2;
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (double& g : grid) g = u(rng);
    Plane out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const double gy = static_cast<double>(y) / cell;
        const int y0 = static_cast<int>(gy);
        const double fy = gy - y0;
        for (int x = 0; x < w; ++x) {
            const double gx = static_cast<double>(x) / cell;
            const int x0 = static_cast<int>(gx);
            const double fx = gx - x0;
            auto at = [&](int xx, int yy) { return grid[static_cast<std::size_t>(yy) * gw + xx]; };
            const double top = (1 - fx) * at(x0, y0) + fx * at(x0 + 1, y0);
            const double bot = (1 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1);
            out[static_cast<std::size_t>(y) * w + x] = (1 - fy) * top + fy * bot;
        }
    }
    return out;
}

Plane object_texture(int w, int h, std::mt19937_64& rng) {
    Plane coarse = smooth_noise(w, h, 4, 0.0, 255.0, rng);
    Plane fine = smooth_noise(w, h, 2, -60.0, 60.0, rng);
    for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = std::clamp(coarse[i] + fine[i], 0.0, 255.0);
    return coarse;
}

Plane background(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double p1 = phase(rng), p2 = phase(rng);
    Plane noise = smooth_noise(w, h, 12, -30.0, 30.0, rng);
    Plane out(noise.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double wave = 30.0 * std::sin(2.0 * std::numbers::pi * x / 41.0 + p1) *
                                std::cos(2.0 * std::numbers::pi * y / 33.0 + p2);
            out[static_cast<std::size_t>(y) * w + x] = 120.0 + wave + noise[static_cast<std::size_t>(y) * w + x];
        }
    return out;
}

void paste(Plane& canvas, int cw, int ch, const Plane& patch, int pw, int ph, int left, int top) {
    for (int y = 0; y < ph; ++y) {
        const int yy = top + y;
        if (yy < 0 || yy >= ch) continue;
        for (int x = 0; x < pw; ++x) {
            const int xx = left + x;
            if (xx < 0 || xx >= cw) continue;
            canvas[static_cast<std::size_t>(yy) * cw + xx] = patch[static_cast<std::size_t>(y) * pw + x];
        }
    }
}

std::vector<Point> trajectory(const ScenarioSpec& s) {
    std::vector<Point> pos(static_cast<std::size_t>(s.length));
    Point p = s.start;
    Point flip{1.0, 1.0};
    const double max_x = s.width - s.object_w;
    const double max_y = s.height - s.object_h;
    for (int t = 0; t < s.length; ++t) {
        pos[static_cast<std::size_t>(t)] = p;
        if (s.velocity.empty()) continue;
        const Point v = s.velocity[std::min<std::size_t>(static_cast<std::size_t>(t), s.velocity.size() - 1)];
        p.x += flip.x * v.x;
        p.y += flip.y * v.y;
        if (p.x < 0.0 || p.x > max_x) {
            p.x = p.x < 0.0 ? -p.x : 2.0 * max_x - p.x;
            flip.x = -flip.x;
        }
        if (p.y < 0.0 || p.y > max_y) {
            p.y = p.y < 0.0 ? -p.y : 2.0 * max_y - p.y;
            flip.y = -flip.y;
        }
        p.x = std::clamp(p.x, 0.0, max_x);
        p.y = std::clamp(p.y, 0.0, max_y);
    }
    return pos;
}

}  // namespace

void validate(const ScenarioSpec& s) {
    auto require = [&](bool ok, const std::string& msg) {
        if (!ok) throw InvalidInput("scenario '" + s.name + "': " + msg);
    };
    require(s.length >= 30, "length must be at least 30");
    require(s.width >= 32 && s.height >= 32, "canvas too small");
    require(s.object_w >= 4 && s.object_h >= 4, "object must be at least 4x4");
    require(s.object_w <= s.width && s.object_h <= s.height, "object larger than the canvas");
    require(s.start.x >= 0 && s.start.y >= 0 && s.start.x + s.object_w <= s.width && s.start.y + s.object_h <= s.height,
            "start position outside the canvas");
    for (const Point& v : s.velocity)
        require(std::abs(v.x) < s.width - s.object_w && std::abs(v.y) < s.height - s.object_h,
                "velocity step larger than the canvas");
    require(s.drift_rate >= 0.0, "drift_rate must be non-negative");
    require(s.occluder.coverage >= 0.0 && s.occluder.coverage <= 1.0, "coverage must lie in [0, 1]");
    require(s.occluder.enter < 0 || (s.occluder.enter < s.occluder.exit && s.occluder.exit <= s.length),
            "occluder script outside the sequence");
    require(s.distractors >= 0 && s.similarity >= 0.0 && s.similarity <= 1.0, "bad distractor settings");
}

Sequence synth_sequence(const ScenarioSpec& spec, std::uint64_t seed) {
    validate(spec);
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 17);
    const int w = spec.width, h = spec.height, ow = spec.object_w, oh = spec.object_h;

    const Plane bg = background(w, h, rng);
    const Plane tex_a = object_texture(ow, oh, rng);
    const Plane tex_b = object_texture(ow, oh, rng);
    struct Distractor {
        Plane texture;
        double radius, omega, phase, tilt;
    };
    std::vector<Distractor> distractors;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < spec.distractors; ++i) {
        Plane own = object_texture(ow, oh, rng);
        for (std::size_t k = 0; k < own.size(); ++k) own[k] = spec.similarity * tex_a[k] + (1 - spec.similarity) * own[k];
        const double r = spec.distractor_radius * std::max(ow, oh) * (0.8 + 0.4 * u01(rng));
        const double omega = (u01(rng) < 0.5 ? -1.0 : 1.0) * (0.03 + 0.03 * u01(rng));
        const double phase = 2.0 * std::numbers::pi * (i + u01(rng)) / std::max(1, spec.distractors);
        const double tilt = std::numbers::pi * u01(rng);
        distractors.push_back({std::move(own), r, omega, phase, tilt});
    }

    const std::vector<Point> path = trajectory(spec);
    Sequence seq;
    seq.name = spec.name;
    for (int t = 0; t < spec.length; ++t) {
        Plane canvas = bg;
        const Point p = path[static_cast<std::size_t>(t)];
        const int left = static_cast<int>(std::lround(p.x));
        const int top = static_cast<int>(std::lround(p.y));
        const double mix = std::min(1.0, spec.drift_rate * t);
        Plane obj(tex_a.size());
        for (std::size_t k = 0; k < obj.size(); ++k) obj[k] = (1 - mix) * tex_a[k] + mix * tex_b[k];
        paste(canvas, w, h, obj, ow, oh, left, top);

        // Distractors sweep flat tilted ellipses around the object and pass in front of it.
        for (const Distractor& d : distractors) {
            const double a = d.phase + d.omega * t;
            const double u = d.radius * std::cos(a);
            const double v = spec.distractor_flatness * d.radius * std::sin(a);
            const double ox = u * std::cos(d.tilt) - v * std::sin(d.tilt);
            const double oy = u * std::sin(d.tilt) + v * std::cos(d.tilt);
            paste(canvas, w, h, d.texture, ow, oh, static_cast<int>(std::lround(p.x + ox)),
                  static_cast<int>(std::lround(p.y + oy)));
        }

        const OccluderScript& oc = spec.occluder;
        if (oc.enter >= 0 && t >= oc.enter && t < oc.exit && oc.coverage > 0.0) {
            const int margin = 2;
            const int cover = static_cast<int>(std::lround(oc.coverage * ow));
            const int x1 = left + cover + (oc.coverage >= 1.0 ? margin : 0);
            for (int y = std::max(0, top - margin); y < std::min(h, top + oh + margin); ++y)
                for (int x = std::max(0, left - margin); x < std::min(w, x1); ++x)
                    canvas[static_cast<std::size_t>(y) * w + x] = 90.0;
        }

        Image img(w, h, 1);
        for (std::size_t k = 0; k < canvas.size(); ++k)
            img.data[k] = static_cast<std::uint8_t>(std::lround(std::clamp(canvas[k], 0.0, 255.0)));
        seq.images.push_back(std::move(img));
        seq.groundtruth.push_back(Box{static_cast<double>(left), static_cast<double>(top), static_cast<double>(ow),
                                      static_cast<double>(oh)});
    }
    return seq;
}

std::vector<std::string> standard_scenario_names() { return {"A", "B", "C", "D"}; }

ScenarioSpec standard_scenario(const std::string& name) {
    ScenarioSpec s;
    if (name == "A" || name == "translation") {
        s.name = "A";
        s.length = 120;
        s.velocity.assign(40, {1.0, 0.5});
        s.velocity.insert(s.velocity.end(), 40, {-0.5, 1.0});
        s.velocity.insert(s.velocity.end(), 40, {-1.0, -0.75});
        s.drift_rate = 0.5 / 120.0;
    } else if (name == "B" || name == "occlusion") {
        s.name = "B";
        s.length = 100;
        s.velocity.assign(50, {0.75, 0.25});
        s.velocity.insert(s.velocity.end(), 50, {-0.5, 0.5});
        s.drift_rate = 0.003;
        s.occluder = {50, 60, 1.0};
    } else if (name == "C" || name == "distractors") {
        s.name = "C";
        s.length = 100;
        s.velocity.assign(50, {0.5, 0.25});
        s.velocity.insert(s.velocity.end(), 50, {-0.5, 0.25});
        s.drift_rate = 0.003;
        s.distractors = 3;
        s.similarity = 0.75;
        s.distractor_radius = 1.5;
    } else if (name == "D" || name == "abrupt") {
        s.name = "D";
        s.length = 100;
        s.velocity.assign(100, {0.5, 0.25});
        for (int t : {24, 49, 74}) s.velocity[static_cast<std::size_t>(t)] = t == 49 ? Point{-7.0, 4.0} : Point{7.0, -4.0};
        s.drift_rate = 0.003;
    } else if (name == "L" || name == "long") {
        s.name = "L";
        s.length = 200;
        s.velocity.assign(50, {1.0, 0.5});
        s.velocity.insert(s.velocity.end(), 50, {-0.5, 1.0});
        s.velocity.insert(s.velocity.end(), 50, {-1.0, -0.75});
        s.velocity.insert(s.velocity.end(), 50, {0.5, -0.75});
        s.drift_rate = 0.5 / 200.0;
    } else {
        throw InvalidInput("unknown scenario '" + name + "' (valid: A, B, C, D, L)");
    }
    return s;
}

}  // namespace cotrack
