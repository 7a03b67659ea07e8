#include <doctest.h>

#include <cmath>
#include <random>

#include "cotrack/filterparts.hpp"
#include "cotrack/linalg.hpp"

using namespace cotrack;
using Eigen::VectorXd;

namespace {

// Flat gray frame with a random-texture square pasted at each listed corner.
Image textured_scene(int w, int h, int side, const std::vector<std::pair<int, int>>& corners) {
    Image img(w, h, 1, 100);
    std::mt19937_64 rng(21);
    std::vector<std::uint8_t> tex(static_cast<std::size_t>(side) * side);
    for (auto& t : tex) t = static_cast<std::uint8_t>(rng() % 256);
    for (const auto& [x0, y0] : corners)
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) img.at(x0 + x, y0 + y) = tex[static_cast<std::size_t>(y) * side + x];
    return img;
}

VectorXd unit(int k, int i) {
    VectorXd v = VectorXd::Zero(k);
    v[i] = 1.0;
    return v;
}

FilterPart make_part(const VectorXd& c, PartState s, int birth, std::uint64_t id) {
    FilterPart p;
    p.classifier = c;
    p.geometry = {5, 5, 2, 0, 0.0, 0.0};
    p.state = s;
    p.birth_frame = birth;
    p.id = id;
    return p;
}

}  // namespace

TEST_CASE("learn_bank separates orthonormal samples") {
    const auto bank = learn_bank({unit(4, 0)}, {unit(4, 1)}, 0.1);
    REQUIRE(bank.cols() == 1);
    CHECK(bank.col(0).dot(unit(4, 0)) > bank.col(0).dot(unit(4, 1)));
    CHECK(bank.col(0).norm() == doctest::Approx(1.0));

    CHECK_THROWS_AS(learn_bank({}, {unit(4, 1)}, 0.1), InvalidInput);
    CHECK_THROWS_AS(learn_bank({unit(4, 0)}, {}, 0.1), InvalidInput);
    CHECK_THROWS_AS(learn_bank({unit(4, 0)}, {unit(3, 1)}, 0.1), InvalidInput);
}

TEST_CASE("learn_bank columns match one-at-a-time solves") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    auto rand_vec = [&] {
        VectorXd v(20);
        for (auto& x : v) x = nd(rng);
        return v;
    };
    std::vector<VectorXd> pos, neg;
    for (int i = 0; i < 5; ++i) pos.push_back(rand_vec());
    for (int i = 0; i < 8; ++i) neg.push_back(rand_vec());
    const Eigen::MatrixXd bank = learn_bank(pos, neg, 0.3);

    Eigen::MatrixXd data(13, 20);
    for (int i = 0; i < 5; ++i) data.row(i) = pos[i].transpose();
    for (int i = 0; i < 8; ++i) data.row(5 + i) = neg[i].transpose();
    for (int i = 0; i < 5; ++i) {
        // ridge regression of one-hot target i, solved on its own
        const Eigen::MatrixXd a = data.transpose() * data + 0.3 * Eigen::MatrixXd::Identity(20, 20);
        const VectorXd c = a.ldlt().solve(data.transpose() * Eigen::VectorXd::Unit(13, i));
        const double cosine = c.dot(bank.col(i)) / c.norm();
        CHECK(cosine >= 1.0 - 1e-8);
    }
}

TEST_CASE("a positive duplicated as a negative fails the ratio test") {
    const VectorXd p = (unit(6, 0) + 0.5 * unit(6, 3)).normalized();
    const auto bank = learn_bank({p, unit(6, 1)}, {p, unit(6, 2)}, 0.1);
    const double own = bank.col(0).dot(p);
    const double max_neg = std::max(bank.col(0).dot(p), bank.col(0).dot(unit(6, 2)));
    CHECK(own == doctest::Approx(max_neg));
    CHECK(!is_discriminative(own, max_neg, 1.4));
}

TEST_CASE("ratio test edge cases") {
    CHECK(is_discriminative(1.5, 1.0, 1.4));
    CHECK(!is_discriminative(1.4, 1.0, 1.4));
    CHECK(is_discriminative(0.2, 0.0, 1.4));
    CHECK(is_discriminative(0.2, -1.0, 1.4));
    CHECK(!is_discriminative(0.0, -1.0, 1.4));
    CHECK(!is_discriminative(-0.5, 1.0, 1.4));
}

TEST_CASE("unique texture on a flat background") {
    const FeatureStack fs = extract_channels(textured_scene(72, 72, 16, {{28, 28}}));
    const Box box{28, 28, 16, 16};
    PartBank bank;
    std::mt19937_64 rng(1);
    const SelectionReport rep = select_parts(fs, box, bank, 0, rng);
    CHECK(rep.evaluated > 0);

    // every side-4 grid point whose patch lies inside the box gets a part
    int interior = 0;
    for (int cy = 28; cy < 44; cy += 2)
        for (int cx = 28; cx < 44; cx += 2) {
            if (cx - 2 < 28 || cx + 2 > 44 || cy - 2 < 28 || cy + 2 > 44) continue;
            ++interior;
            bool found = false;
            for (const FilterPart& p : rep.accepted)
                found |= p.geometry.cx == cx && p.geometry.cy == cy && p.geometry.side == 4;
            CHECK_MESSAGE(found, "grid point ", cx, ",", cy);
        }
    CHECK(interior > 0);
    for (const FilterPart& p : rep.accepted) {
        CHECK(p.state == PartState::Candidate);
        CHECK(p.classifier.norm() == doctest::Approx(1.0));
    }

    // with no edges outside the box, negatives are random outside windows
    const auto neg = pick_negatives(fs, box, 4, 0, bank.cfg, rng);
    CHECK(neg.size() == static_cast<std::size_t>(bank.cfg.n_hard_negatives + bank.cfg.n_random_negatives));
    for (const auto& g : neg) {
        const bool outside = g.left() + 4 <= box.x || g.left() >= box.x + box.w || g.top() + 4 <= box.y ||
                             g.top() >= box.y + box.h;
        CHECK(outside);
    }
}

TEST_CASE("texture repeated in the background is rejected") {
    const FeatureStack fs =
        extract_channels(textured_scene(120, 120, 16, {{52, 52}, {8, 8}, {96, 8}, {8, 96}}));
    PartBank bank;
    bank.cfg.n_hard_negatives = 4000;
    std::mt19937_64 rng(2);
    const SelectionReport rep = select_parts(fs, {52, 52, 16, 16}, bank, 0, rng);
    CHECK(rep.evaluated > 0);
    CHECK(rep.accepted.empty());
    CHECK(rep.best_ratio <= bank.cfg.t_d);
}

TEST_CASE("covered grid points are skipped") {
    const FeatureStack fs = extract_channels(textured_scene(72, 72, 16, {{28, 28}}));
    PartBank bank;
    std::mt19937_64 rng(1);
    const SelectionReport first = select_parts(fs, {28, 28, 16, 16}, bank, 0, rng);
    bank.parts = first.accepted;
    const SelectionReport second = select_parts(fs, {28, 28, 16, 16}, bank, 1, rng);
    CHECK(second.evaluated < first.evaluated);
}

TEST_CASE("response maps vote for the object center") {
    const FeatureStack fs = extract_channels(textured_scene(72, 72, 16, {{28, 28}}));
    PartBank bank;
    std::mt19937_64 rng(1);
    const SelectionReport rep = select_parts(fs, {28, 28, 16, 16}, bank, 0, rng);
    REQUIRE(!rep.accepted.empty());

    int checked = 0;
    for (const FilterPart& part : rep.accepted) {
        if (std::abs(part.geometry.dx) > 3 || std::abs(part.geometry.dy) > 3) continue;
        ++checked;
        const Peak p = argmax(response_map(part, fs));
        CHECK(std::abs(p.x - 36) <= 1);
        CHECK(std::abs(p.y - 36) <= 1);

        const Peak moved = argmax(response_map(part, shift_stack(fs, 5, 3)));
        CHECK(moved.x - p.x == 5);
        CHECK(moved.y - p.y == 3);
    }
    CHECK(checked > 0);

    FeatureStack zero = fs;
    zero.values.setZero();
    CHECK(response_map(rep.accepted.front(), zero).values.maxCoeff() == 0.0);
    CHECK(response_map(rep.accepted.front(), fs).values.minCoeff() >= 0.0);

    // batched responses equal the single-part path
    bank.parts = rep.accepted;
    const PartResponses all = respond_all(bank, fs);
    for (std::size_t i = 0; i < bank.parts.size(); i += 7)
        CHECK((all.maps[i].values - response_map(bank.parts[i], fs).values).abs().maxCoeff() < 1e-12);
}

TEST_CASE("vote aggregation") {
    const FeatureStack fs = extract_channels(textured_scene(72, 72, 16, {{28, 28}}));
    PartBank bank;
    std::mt19937_64 rng(1);
    const SelectionReport rep = select_parts(fs, {28, 28, 16, 16}, bank, 0, rng);
    REQUIRE(rep.accepted.size() >= 2);

    bank.parts = rep.accepted;
    const Aggregate none = aggregate_votes(bank, fs, 2.0);
    CHECK(none.no_voters());
    CHECK(none.map.values.maxCoeff() == 0.0);

    bank.parts = {rep.accepted[0]};
    bank.parts[0].state = PartState::Reliable;
    const Aggregate one = aggregate_votes(bank, fs, 2.0);
    CHECK(one.voters == 1);
    const VoteMap smoothed = gaussian_smooth(response_map(bank.parts[0], fs), 2.0);
    CHECK((one.map.values - smoothed.values).abs().maxCoeff() < 1e-12);

    // two voters on the same center: the mean keeps the shared peak, and the
    // summed evidence dominates either part alone
    bank.parts.push_back(rep.accepted[1]);
    bank.parts[1].state = PartState::Gold;
    const Aggregate two = aggregate_votes(bank, fs, 2.0);
    CHECK(two.voters == 2);
    const VoteMap s1 = gaussian_smooth(response_map(bank.parts[1], fs), 2.0);
    CHECK((two.map.values - 0.5 * (smoothed.values + s1.values)).abs().maxCoeff() < 1e-12);
    const double summed_peak = 2.0 * two.map.values.maxCoeff();
    CHECK(summed_peak >= smoothed.values.maxCoeff());
    CHECK(summed_peak >= s1.values.maxCoeff());
    const Peak pk = argmax(two.map);
    CHECK(std::abs(pk.x - 36) <= 2);
    CHECK(std::abs(pk.y - 36) <= 2);
}

TEST_CASE("co-occurrence counting") {
    PartBank bank;
    bank.parts = {make_part(unit(8, 0), PartState::Candidate, 0, 0), make_part(unit(8, 1), PartState::Reliable, 0, 1),
                  make_part(unit(8, 2), PartState::Gold, 0, 2), make_part(unit(8, 3), PartState::Reliable, 0, 3)};
    const double r = agreement_radius(60);
    CHECK(r == 3.0);
    CHECK(agreement_radius(100) == 5.0);
    const std::vector<std::optional<Peak>> peaks{Peak{20, 20, 1.0}, Peak{24, 20, 1.0}, Peak{20, 20, 1.0},
                                                 std::nullopt};
    record_cooccurrence(bank, peaks, {20, 20}, r);
    CHECK(bank.parts[0].votes_cast == 1);
    CHECK(bank.parts[0].votes_agreeing == 1);
    CHECK(bank.parts[1].votes_cast == 1);
    CHECK(bank.parts[1].votes_agreeing == 0);
    CHECK(bank.parts[2].votes_cast == 0);
    CHECK(bank.parts[2].votes_agreeing == 0);
    CHECK(bank.parts[3].votes_cast == 1);
    CHECK(bank.parts[3].votes_agreeing == 0);
    CHECK_THROWS_AS(record_cooccurrence(bank, {}, {0, 0}, r), InvalidInput);
}

TEST_CASE("lifecycle thresholds") {
    PartBank bank;
    auto with_votes = [](FilterPart p, int agree, int cast) {
        p.votes_agreeing = agree;
        p.votes_cast = cast;
        return p;
    };
    bank.parts = {with_votes(make_part(unit(4, 0), PartState::Candidate, 0, 0), 5, 20),
                  with_votes(make_part(unit(4, 1), PartState::Reliable, 0, 1), 1, 20),
                  with_votes(make_part(unit(4, 2), PartState::Reliable, 0, 2), 3, 20),
                  with_votes(make_part(unit(4, 3), PartState::Reliable, 0, 3), 10, 20),
                  with_votes(make_part(unit(4, 0), PartState::Candidate, 0, 4), 3, 3)};
    lifecycle_update(bank, 10);
    REQUIRE(bank.parts.size() == 4);
    CHECK(bank.parts[0].state == PartState::Reliable);
    CHECK(bank.parts[1].id == 2);
    CHECK(bank.parts[1].state == PartState::Reliable);
    CHECK(bank.parts[2].state == PartState::Gold);
    // below the support requirement: no promotion yet
    CHECK(bank.parts[3].state == PartState::Candidate);
    for (const FilterPart& p : bank.parts) {
        if (p.state == PartState::Gold) continue;
        CHECK(p.votes_cast == 0);
        CHECK(p.votes_agreeing == 0);
    }
    CHECK_THROWS_AS(lifecycle_update(bank, 7), InvalidInput);
}

TEST_CASE("budget enforcement") {
    PartBank bank;
    bank.cfg.n_max = 2;
    bank.parts = {make_part(unit(4, 0), PartState::Reliable, 0, 0), make_part(unit(4, 1), PartState::Reliable, 1, 1),
                  make_part(unit(4, 0), PartState::Reliable, 2, 2)};
    enforce_budget(bank);
    REQUIRE(bank.parts.size() == 2);
    CHECK(bank.parts[0].id == 0);
    CHECK(bank.parts[1].id == 1);

    enforce_budget(bank);
    CHECK(bank.parts.size() == 2);

    auto orthogonal = [] {
        PartBank b;
        b.cfg.n_max = 2;
        b.parts = {make_part(unit(4, 0), PartState::Reliable, 3, 0), make_part(unit(4, 1), PartState::Reliable, 3, 1),
                   make_part(unit(4, 2), PartState::Reliable, 3, 2)};
        enforce_budget(b);
        return b;
    };
    const PartBank a = orthogonal(), b = orthogonal();
    REQUIRE(a.parts.size() == 2);
    CHECK(a.parts[0].id == 0);
    CHECK(a.parts[1].id == 1);
    CHECK(b.parts[1].id == a.parts[1].id);

    // gold stays even when it is the newest duplicate
    PartBank g;
    g.cfg.n_max = 1;
    g.parts = {make_part(unit(4, 0), PartState::Reliable, 0, 0), make_part(unit(4, 0), PartState::Gold, 5, 1)};
    enforce_budget(g);
    REQUIRE(g.parts.size() == 1);
    CHECK(g.parts[0].state == PartState::Gold);

    // candidates do not count against the budget
    PartBank c;
    c.cfg.n_max = 1;
    c.parts = {make_part(unit(4, 0), PartState::Reliable, 0, 0), make_part(unit(4, 0), PartState::Candidate, 1, 1)};
    enforce_budget(c);
    CHECK(c.parts.size() == 2);
}
