#include <doctest.h>

#include <cmath>
#include <random>

#include "cotrack/error.hpp"
#include "cotrack/fusion.hpp"
#include "cotrack/votemap.hpp"

using namespace cotrack;

namespace {

VoteMap random_map(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    VoteMap m(w, h, MapKind::Fused);
    for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values.data()[i] = u(rng);
    return m;
}

std::vector<Correspondence> grid_matches(const Point& c, double scale, double shift_x) {
    std::vector<Correspondence> out;
    for (double dy : {-6.0, 0.0, 6.0})
        for (double dx : {-6.0, 0.0, 6.0}) {
            const Point e{c.x + dx, c.y + dy};
            out.push_back({e, {c.x + scale * dx + shift_x, c.y + scale * dy}});
        }
    return out;
}

}  // namespace

TEST_CASE("argmax takes the first maximum") {
    VoteMap m(5, 4, MapKind::Fused);
    m.at(3, 1) = 2.0;
    m.at(1, 2) = 2.0;
    const Peak p = argmax(m);
    CHECK(p.x == 3);
    CHECK(p.y == 1);
    CHECK(p.value == 2.0);
}

TEST_CASE("parabola refinement") {
    VoteMap m(7, 7, MapKind::Fused);
    // samples of 1 - (x - 3.3)^2 around x = 3
    for (int x = 2; x <= 4; ++x) m.at(x, 3) = 1.0 - (x - 3.3) * (x - 3.3);
    m.at(3, 2) = m.at(3, 4) = 0.5;
    const Point p = refine_peak(m, argmax(m));
    CHECK(p.x == doctest::Approx(3.3));
    CHECK(p.y == doctest::Approx(3.0));

    VoteMap edge(4, 4, MapKind::Fused);
    edge.at(0, 0) = 1.0;
    const Point q = refine_peak(edge, argmax(edge));
    CHECK(q.x == 0.0);
    CHECK(q.y == 0.0);
}

TEST_CASE("gaussian smoothing") {
    VoteMap m(21, 21, MapKind::FilterParts);
    m.at(10, 10) = 1.0;
    const VoteMap s = gaussian_smooth(m, 2.0);
    CHECK(s.values.sum() == doctest::Approx(1.0));
    CHECK(argmax(s).x == 10);
    CHECK(s.at(12, 10) == doctest::Approx(s.at(8, 10)));
    CHECK(s.at(12, 10) / s.at(10, 10) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
    CHECK_THROWS_AS(gaussian_smooth(m, 0.0), InvalidInput);

    VoteMap z(5, 5, MapKind::Fused);
    normalize_max(z);
    CHECK(z.values.maxCoeff() == 0.0);
}

TEST_CASE("uncertainty mask") {
    const VoteMap m = uncertainty_mask({10, 12}, 30, 30, 5.0);
    CHECK(m.at(10, 12) == 1.0);
    CHECK(m.at(15, 12) == doctest::Approx(std::exp(-1.0)));
    CHECK(m.at(10, 7) == doctest::Approx(std::exp(-1.0)));
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 30; ++x)
            for (int y2 = 0; y2 < 30; y2 += 3)
                for (int x2 = 0; x2 < 30; x2 += 3) {
                    const double d1 = std::hypot(x - 10.0, y - 12.0);
                    const double d2 = std::hypot(x2 - 10.0, y2 - 12.0);
                    if (d1 <= d2) CHECK(m.at(x, y) >= m.at(x2, y2));
                }
    CHECK_THROWS_AS(uncertainty_mask({0, 0}, 4, 4, 0.0), InvalidInput);
}

TEST_CASE("fuse arithmetic and reductions") {
    VoteMap f(1, 1, MapKind::FilterParts), c(1, 1, MapKind::ConvNet), m(1, 1, MapKind::Mask);
    f.at(0, 0) = 0.5;
    c.at(0, 0) = 1.0;
    m.at(0, 0) = 0.8;
    CHECK(fuse(f, c, m, 0.6).at(0, 0) == doctest::Approx(0.56));

    std::mt19937_64 rng(3);
    const VoteMap fr = random_map(8, 6, rng), cr = random_map(8, 6, rng), mr = random_map(8, 6, rng);
    CHECK((fuse(fr, cr, mr, 1.0).values - fr.values * mr.values).abs().maxCoeff() < 1e-15);
    CHECK((fuse(fr, cr, mr, 0.0).values - cr.values * mr.values).abs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(fuse(fr, random_map(6, 8, rng), mr, 0.6), InvalidInput);
}

TEST_CASE("fusion is linear in each pathway") {
    std::mt19937_64 rng(7);
    const VoteMap f1 = random_map(9, 9, rng), f2 = random_map(9, 9, rng), c = random_map(9, 9, rng);
    const VoteMap m = random_map(9, 9, rng);
    const VoteMap zero(9, 9, MapKind::Fused);
    const double a = 0.7, b = 2.5;
    VoteMap mix(9, 9, MapKind::FilterParts);
    mix.values = a * f1.values + b * f2.values;
    const Eigen::ArrayXXd lhs = fuse(mix, c, m, 0.6).values;
    const Eigen::ArrayXXd rhs =
        a * fuse(f1, zero, m, 0.6).values + b * fuse(f2, zero, m, 0.6).values + fuse(zero, c, m, 0.6).values;
    CHECK((lhs - rhs).abs().maxCoeff() < 1e-12);
}

TEST_CASE("center picking") {
    VoteMap p(10, 10, MapKind::Fused);
    p.at(7, 2) = 3.0;
    CenterPick pick = pick_center(p, {0, 0});
    CHECK(!pick.degenerate);
    CHECK(pick.center == Point{7, 2});

    p.at(1, 8) = 3.0;
    CHECK(pick_center(p, {0, 9}).center == Point{1, 8});
    CHECK(pick_center(p, {9, 0}).center == Point{7, 2});

    // equidistant ties fall back to row-major order
    VoteMap q(5, 5, MapKind::Fused);
    q.at(1, 2) = q.at(3, 2) = 1.0;
    CHECK(pick_center(q, {2, 2}).center == Point{1, 2});

    const VoteMap zero(6, 6, MapKind::Fused);
    const CenterPick degenerate = pick_center(zero, {2.5, 3.5});
    CHECK(degenerate.degenerate);
    CHECK(degenerate.center == Point{2.5, 3.5});

    std::mt19937_64 rng(1);
    VoteMap r = random_map(12, 12, rng);
    const Point before = pick_center(r, {6, 6}).center;
    r.values *= 37.5;
    CHECK(pick_center(r, {6, 6}).center == before);
}

TEST_CASE("mask keeps the pick near the previous center") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const VoteMap f = random_map(24, 24, rng), c = random_map(24, 24, rng);
        const Point prev{static_cast<double>(rng() % 24), static_cast<double>(rng() % 24)};
        const VoteMap ones = [] {
            VoteMap o(24, 24, MapKind::Mask);
            o.values.setOnes();
            return o;
        }();
        const Point unmasked = pick_center(fuse(f, c, ones, 0.6), prev).center;
        const Point masked = pick_center(fuse(f, c, uncertainty_mask(prev, 24, 24, 6.0), 0.6), prev).center;
        CHECK(distance(masked, prev) <= distance(unmasked, prev));
    }
}

TEST_CASE("percentile gate") {
    CHECK(percentile_value({5, 1, 4, 2, 3}, 0.4) == 2.0);
    CHECK(percentile_value({5, 1, 4, 2, 3}, 0.0) == 1.0);
    CHECK_THROWS_AS(percentile_value({}, 0.5), InvalidInput);

    std::vector<double> history;
    for (int i = 0; i < 19; ++i) CHECK(!hcf_gate(history, 0.0));
    CHECK(history.size() == 19);
    CHECK(hcf_gate(history, 0.0));

    std::vector<double> spread;
    for (int i = 1; i <= 30; ++i) hcf_gate(spread, static_cast<double>(i));
    // 31 entries: the 11th-percentile rank is ceil(3.41) = 4
    CHECK(hcf_gate(spread, 4.0));
    CHECK(!hcf_gate(spread, 4.5));
}

TEST_CASE("affine fit recovers a known transform") {
    std::vector<Correspondence> m;
    const double a00 = 1.1, a01 = -0.2, a10 = 0.15, a11 = 0.9, t0 = 3.0, t1 = -2.0;
    for (double y : {0.0, 5.0, 11.0})
        for (double x : {1.0, 7.0})
            m.push_back({{x, y}, {a00 * x + a01 * y + t0, a10 * x + a11 * y + t1}});
    double a[2][2], t[2];
    REQUIRE(fit_affine(m, a, t));
    CHECK(a[0][0] == doctest::Approx(a00));
    CHECK(a[0][1] == doctest::Approx(a01));
    CHECK(a[1][0] == doctest::Approx(a10));
    CHECK(a[1][1] == doctest::Approx(a11));
    CHECK(t[0] == doctest::Approx(t0));
    CHECK(t[1] == doctest::Approx(t1));

    const std::vector<Correspondence> line{{{0, 0}, {0, 0}}, {{1, 1}, {1, 1}}, {{2, 2}, {2, 2}}};
    CHECK(!fit_affine(line, a, t));
    CHECK(!fit_affine({line[0], line[1]}, a, t));
}

TEST_CASE("box estimate") {
    const Box prev{40, 30, 16, 12};
    const Point c{50, 40};

    const Box same = estimate_box(grid_matches(c, 1.0, 0.0), prev, c, 200, 150);
    CHECK(same.x == doctest::Approx(42.0));
    CHECK(same.y == doctest::Approx(34.0));
    CHECK(same.w == doctest::Approx(16.0));
    CHECK(same.h == doctest::Approx(12.0));

    const Box moved = estimate_box(grid_matches(c, 1.0, 4.0), prev, c, 200, 150);
    CHECK(moved.x == doctest::Approx(same.x + 4.0));
    CHECK(moved.y == doctest::Approx(same.y));
    CHECK(moved.w == doctest::Approx(16.0));

    const Box grown = estimate_box(grid_matches(c, 1.2, 0.0), prev, c, 200, 150);
    CHECK(grown.w / prev.w == doctest::Approx(1.2).epsilon(0.05));
    CHECK(grown.h / prev.h == doctest::Approx(1.2).epsilon(0.05));
    CHECK(grown.center().x == doctest::Approx(c.x));

    // one or two matches translate only
    const std::vector<Correspondence> two{{{50, 40}, {53, 38}}, {{44, 40}, {47, 38}}};
    const Box shifted = estimate_box(two, prev, c, 200, 150);
    CHECK(shifted.x == doctest::Approx(45.0));
    CHECK(shifted.y == doctest::Approx(32.0));
    CHECK(shifted.w == 16.0);

    const Box carried = estimate_box({}, prev, c, 200, 150);
    CHECK(carried == Box::centered(c, 16, 12));

    // a squashing fit is implausible and falls back to translation
    std::vector<Correspondence> squash;
    for (const auto& g : grid_matches(c, 1.0, 0.0))
        squash.push_back({g.expected, {c.x + 1.6 * (g.expected.x - c.x), c.y + 0.5 * (g.expected.y - c.y)}});
    const Box fallback = estimate_box(squash, prev, c, 200, 150);
    CHECK(fallback.w == doctest::Approx(16.0));
    CHECK(fallback.h == doctest::Approx(12.0));

    const Box clipped = estimate_box({}, prev, {2, 2}, 200, 150);
    CHECK(clipped.x == 0.0);
    CHECK(clipped.y == 0.0);
    CHECK(clipped.w == doctest::Approx(10.0));
    CHECK(clipped.h == doctest::Approx(8.0));
}
