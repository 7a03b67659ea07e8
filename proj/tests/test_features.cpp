#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "cotrack/error.hpp"
#include "cotrack/features.hpp"

using namespace cotrack;

namespace {

Image random_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Image img(w, h, 1);
    for (auto& p : img.data) p = static_cast<std::uint8_t>(rng() % 256);
    return img;
}

FeatureStack single_channel(int w, int h, double fill) {
    FeatureStack s;
    s.width = w;
    s.height = h;
    s.depth = 1;
    s.values = RowMatrixXd::Constant(static_cast<Eigen::Index>(w) * h, 1, fill);
    s.mean = Eigen::VectorXd::Zero(1);
    s.scale = Eigen::VectorXd::Ones(1);
    return s;
}

}  // namespace

TEST_CASE("constant image gives zero channels") {
    const FeatureStack fs = extract_channels(Image(20, 20, 1, 77));
    CHECK(fs.depth == 9);
    CHECK(fs.values.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("vertical step edge") {
    Image img(20, 20, 1, 10);
    for (int y = 0; y < 20; ++y)
        for (int x = 10; x < 20; ++x) img.at(x, y) = 200;
    const FeatureStack fs = extract_channels(img);
    // raw central difference: nonzero only on the two columns next to the edge
    for (int y = 0; y < 20; ++y) {
        CHECK(fs.raw(9, y, FeatureStack::kGradX) > 0.0);
        CHECK(fs.raw(10, y, FeatureStack::kGradX) > 0.0);
        CHECK(fs.raw(5, y, FeatureStack::kGradX) == doctest::Approx(0.0));
        for (int x = 0; x < 20; ++x) CHECK(fs.raw(x, y, FeatureStack::kGradY) == doctest::Approx(0.0));
    }
    CHECK(fs.raw(9, 3, FeatureStack::kGradX) == doctest::Approx(0.5 * 190.0 / 255.0));
}

TEST_CASE("channels are standardized") {
    const Image img = random_image(32, 24, 3);
    const FeatureStack fs = extract_channels(img);
    for (int c = 0; c < fs.depth; ++c) {
        const auto col = fs.values.col(c);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().mean();
        CHECK(std::abs(mean) <= 1e-9);
        if (fs.scale[c] * fs.scale[c] > 1e-6) CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
    }
    // raw gray recomputed directly from the pixels
    CHECK(fs.raw(4, 7, FeatureStack::kGray) == doctest::Approx(img.at(4, 7) / 255.0));
    const double gx = 0.5 * (img.at(5, 7) - img.at(3, 7)) / 255.0;
    CHECK(fs.raw(4, 7, FeatureStack::kGradX) == doctest::Approx(gx));

    const FeatureStack again = extract_channels(img);
    CHECK(again.values == fs.values);
}

TEST_CASE("orientation bins hold the gradient magnitude") {
    const FeatureStack fs = extract_channels(random_image(24, 24, 8));
    for (int y = 0; y < 24; y += 5)
        for (int x = 0; x < 24; x += 5) {
            double bins = 0.0;
            for (int c = 3; c < fs.depth; ++c) bins += fs.raw(x, y, c);
            const double mag = std::hypot(fs.raw(x, y, 1), fs.raw(x, y, 2));
            CHECK(bins == doctest::Approx(mag).epsilon(1e-9));
        }
}

TEST_CASE("search crop geometry") {
    const Image img = random_image(100, 80, 1);
    const SearchCrop crop = crop_search_region(img, {50, 40}, 20, 20);
    CHECK(crop.image.width == 60);
    CHECK(crop.image.height == 60);
    const Point c = crop.map.to_frame({30, 30});
    CHECK(c.x == 50.0);
    CHECK(c.y == 40.0);
    CHECK(crop.image.at(30, 30) == img.at(50, 40));

    const SearchCrop corner = crop_search_region(img, {0, 0}, 20, 20);
    CHECK(corner.image.width == 60);
    CHECK(corner.image.at(0, 0) == img.at(0, 0));
    CHECK(corner.image.at(10, 29) == img.at(0, 0));
    CHECK(corner.image.at(45, 10) == img.at(15, 0));

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-200, 200);
    const SearchCrop scaled = crop_square(img, {33.3, 41.7}, 77.0, 48);
    for (int i = 0; i < 100; ++i) {
        const Point p{u(rng), u(rng)};
        const Point q = scaled.map.to_crop(scaled.map.to_frame(p));
        CHECK(q.x == doctest::Approx(p.x).epsilon(1e-12));
        CHECK(q.y == doctest::Approx(p.y).epsilon(1e-12));
    }
    CHECK_THROWS_AS(crop_search_region(img, {1, 1}, 0, 5), InvalidInput);
}

TEST_CASE("default scales") {
    const auto s = default_scales(16, 20);
    CHECK(s == std::array<int, 3>{4, 8, 16});
    const auto tiny = default_scales(3, 3);
    CHECK(tiny[0] < tiny[1]);
    CHECK(tiny[1] < tiny[2]);
}

TEST_CASE("patch proposals") {
    const std::array<int, 3> scales{4, 8, 16};
    const auto g = propose_patches({10, 10, 8, 8}, 2, scales, 64, 64);
    REQUIRE(!g.empty());
    CHECK(g.front().side == 4);
    std::set<std::pair<int, int>> points;
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK((g[i].cx - 10) % 2 == 0);
        CHECK((g[i].cy - 10) % 2 == 0);
        points.insert({g[i].cx, g[i].cy});
        if (i > 0 && g[i].cx == g[i - 1].cx && g[i].cy == g[i - 1].cy) CHECK(g[i].side > g[i - 1].side);
        CHECK(g[i].dx == doctest::Approx(g[i].cx - 14.0));
    }
    CHECK(points.size() == 16);

    CHECK(propose_patches({10, 10, 3, 3}, 2, scales, 64, 64).empty());

    // every box pixel under some side-4 patch
    const auto big = propose_patches({8, 8, 32, 32}, 2, scales, 64, 64);
    std::set<std::tuple<int, int, int, int>> seen;
    for (const auto& p : big) seen.insert({p.cx, p.cy, p.side, p.scale_index});
    CHECK(seen.size() == big.size());
    for (int y = 8; y < 40; ++y)
        for (int x = 8; x < 40; ++x) {
            bool hit = false;
            for (const auto& p : big)
                hit |= p.side == 4 && x >= p.left() && x < p.left() + 4 && y >= p.top() && y < p.top() + 4;
            CHECK(hit);
        }
    CHECK(propose_patches({8, 8, 32, 32}, 2, scales, 64, 64).size() == big.size());
}

TEST_CASE("patch descriptors") {
    const FeatureStack five = single_channel(3, 3, 5.0);
    PatchGeometry one{1, 1, 1, 0, 0.0, 0.0};
    const Eigen::VectorXd d = vectorize_patch(five, one);
    REQUIRE(d.size() == 1);
    CHECK(d[0] == 1.0);

    CHECK(vectorize_patch(single_channel(4, 4, 0.0), {2, 2, 2, 0, 0, 0}).norm() == 0.0);

    const FeatureStack fs = extract_channels(random_image(30, 30, 5));
    const PatchGeometry g{12, 15, 6, 1, 0, 0};
    CHECK(vectorize_patch(fs, g).norm() == doctest::Approx(1.0).epsilon(1e-12));

    // patch_matrix rows match the unnormalized flatten
    const RowMatrixXd windows = patch_matrix(fs, 6);
    const Eigen::VectorXd norms = patch_norms(fs, 6);
    const int nx = fs.width - 6 + 1;
    const Eigen::Index row = static_cast<Eigen::Index>(g.top()) * nx + g.left();
    CHECK(norms[row] == doctest::Approx(windows.row(row).norm()).epsilon(1e-10));
    const Eigen::VectorXd from_matrix = windows.row(row).transpose() / norms[row];
    CHECK((from_matrix - vectorize_patch(fs, g)).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(vectorize_patch(fs, {1, 1, 6, 0, 0, 0}), InvalidInput);
}

TEST_CASE("edge density") {
    CHECK(edge_density(extract_channels(Image(20, 20, 1, 40)), {10, 10, 6, 0, 0, 0}) == 0.0);

    Image img(40, 20, 1, 60);
    for (int y = 0; y < 20; ++y)
        for (int x = 10; x < 20; ++x) img.at(x, y) = static_cast<std::uint8_t>((x * 37 + y * 91) % 256);
    for (int y = 0; y < 20; ++y) img.at(30, y) = 220;
    const FeatureStack fs = extract_channels(img);
    const double textured = edge_density(fs, {15, 10, 6, 0, 0, 0});
    const double flat = edge_density(fs, {5, 10, 6, 0, 0, 0});
    CHECK(flat < 1e-12);
    CHECK(textured > flat);
    CHECK(edge_density(fs, {30, 10, 6, 0, 0, 0}) > 0.0);
}

TEST_CASE("shifted stack") {
    const FeatureStack fs = extract_channels(random_image(20, 20, 2));
    const FeatureStack moved = shift_stack(fs, 3, -2);
    CHECK(moved.at(10, 5, 4) == fs.at(7, 7, 4));
    CHECK(moved.at(0, 0, 1) == fs.at(0, 2, 1));
}
