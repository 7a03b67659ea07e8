#include "cotrack/selftest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <random>

#include "cotrack/convnet.hpp"
#include "cotrack/filterparts.hpp"
#include "cotrack/linalg.hpp"

namespace cotrack::selftest {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return m;
}

double log_uniform(double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(std::log10(lo), std::log10(hi));
    return std::pow(10.0, u(rng));
}

}  // namespace

SuiteResult rescale_suite(int trials, std::uint64_t seed) {
    const auto t0 = Clock::now();
    SuiteResult r;
    r.name = "weighted-rescale";
    r.trials = trials;
    r.bound = 1e-8;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size(1, 64);
    double worst_cos = 0.0;
    double worst_rel = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const int n = size(rng);
        const int k = size(rng);
        const Eigen::MatrixXd d = random_matrix(n, k, rng);
        const Eigen::Index i = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
        const double omega = log_uniform(1.0, 1e3, rng);
        const double lambda = log_uniform(1e-3, 10.0, rng);

        const Eigen::VectorXd c = linalg::ridge(d, lambda).col(i);
        const Eigen::VectorXd theta = linalg::ridge_weighted(d, i, omega, lambda);
        const double cosine = theta.dot(c) / (theta.norm() * c.norm());
        const double q = linalg::rescale_factor(omega, d.row(i).dot(c));
        worst_cos = std::max(worst_cos, 1.0 - cosine);
        worst_rel = std::max(worst_rel, (theta - q * c).norm() / theta.norm());
    }
    r.worst = std::max(worst_cos, worst_rel);
    r.passed = r.worst <= r.bound;
    char buf[128];
    std::snprintf(buf, sizeof buf, "1-cos %.2e, rescale %.2e", worst_cos, worst_rel);
    r.detail = buf;
    r.seconds = seconds_since(t0);
    return r;
}

SuiteResult primal_dual_suite(int trials, std::uint64_t seed) {
    const auto t0 = Clock::now();
    SuiteResult r;
    r.name = "primal-dual";
    r.trials = trials;
    r.bound = 1e-8;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> size(1, 64);
    for (int trial = 0; trial < trials; ++trial) {
        const Eigen::MatrixXd d = random_matrix(size(rng), size(rng), rng);
        const double lambda = log_uniform(1e-3, 10.0, rng);
        const double diff = (linalg::ridge_primal(d, lambda) - linalg::ridge_dual(d, lambda)).cwiseAbs().maxCoeff();
        r.worst = std::max(r.worst, diff);
    }
    r.passed = r.worst <= r.bound;
    r.detail = "max-norm bank difference";
    r.seconds = seconds_since(t0);
    return r;
}

SuiteResult gradient_suite(int coords_per_kind, std::uint64_t seed) {
    using namespace convnet;
    const auto t0 = Clock::now();
    SuiteResult r;
    r.name = "gradients";
    r.bound = 1e-3;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;

    ConvNet<double> net = net_init<double>(seed);
    // small random biases keep units away from the ReLU kink at zero
    for (auto& layer : net.layers)
        for (Eigen::Index i = 0; i < layer.params.bias.size(); ++i) layer.params.bias[i] = 0.1 * nd(rng);
    const int side = 4 * net.plan.downsample();
    Tensor<double> x = Tensor<double>::zeros(net.plan.input, side, side);
    for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = nd(rng);
    const int out = side / net.plan.downsample();
    const Mat<double> target = make_target<double>({side / 2.0, side / 2.0}, 1.0, out, out, net.plan.downsample());
    const LossResult<double> analytic = loss_and_backward(net, x, target);

    // layer kinds: conv+ReLU, conv+ReLU+pool, linear output conv; weights and biases of each
    std::map<std::string, std::vector<std::size_t>> kinds;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const auto& l = net.layers[li];
        kinds[!l.relu ? "linear" : l.pool_after ? "conv-relu-pool" : "conv-relu"].push_back(li);
    }
    const double h = 1e-5;
    std::string detail;
    for (const auto& [kind, members] : kinds) {
        double kind_worst = 0.0;
        for (int c = 0; c < coords_per_kind; ++c) {
            const std::size_t li = members[std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng)];
            auto& params = net.layers[li].params;
            const bool bias = c % 4 == 3;
            const Eigen::Index n = bias ? params.bias.size() : params.weights.size();
            const Eigen::Index idx = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
            double& w = bias ? params.bias[idx] : params.weights.data()[idx];
            const double an = bias ? analytic.gradients[li].bias[idx] : analytic.gradients[li].weights.data()[idx];
            const double w0 = w;
            w = w0 + h;
            const double lp = loss_and_backward(net, x, target).loss;
            w = w0 - h;
            const double lm = loss_and_backward(net, x, target).loss;
            w = w0;
            const double fd = (lp - lm) / (2 * h);
            const double rel = std::abs(fd - an) / std::max(1e-8, std::abs(fd) + std::abs(an));
            kind_worst = std::max(kind_worst, rel);
            ++r.trials;
        }
        r.worst = std::max(r.worst, kind_worst);
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s%s %.1e", detail.empty() ? "" : ", ", kind.c_str(), kind_worst);
        detail += buf;
    }
    r.passed = r.worst <= r.bound;
    r.detail = detail;
    r.seconds = seconds_since(t0);
    return r;
}

SuiteResult overfit_suite(int steps, std::uint64_t seed) {
    using namespace convnet;
    const auto t0 = Clock::now();
    SuiteResult r;
    r.name = "overfit-one-sample";
    r.trials = steps;
    r.bound = 0.1;
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> nd;
    ConvNet<float> net = net_init<float>(seed);
    AdamState<float> adam = AdamState<float>::for_net(net, AdamConfig{.lr = 1e-3});
    const int side = 48;
    Tensor<float> x = Tensor<float>::zeros(net.plan.input, side, side);
    for (Eigen::Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = nd(rng);
    const int factor = net.plan.downsample();
    const TrainSample<float> s = make_sample(std::move(x), {20.0, 26.0}, 1.5, factor, 1, SampleSource::InitialFrame);
    const double initial = loss_and_backward(net, s).loss;
    const std::vector<double> losses = train_epochs(net, adam, {s}, steps, rng);
    const double final_loss = loss_and_backward(net, s).loss;
    r.worst = initial > 0.0 ? final_loss / initial : 1.0;
    r.passed = r.worst < r.bound && !losses.empty();
    char buf[96];
    std::snprintf(buf, sizeof buf, "loss %.4g -> %.4g", initial, final_loss);
    r.detail = buf;
    r.seconds = seconds_since(t0);
    return r;
}

SuiteResult lifecycle_suite(int frames, int runs, std::uint64_t seed) {
    const auto t0 = Clock::now();
    SuiteResult r;
    r.name = "lifecycle";
    r.bound = 0.0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    int violations = 0;
    int promoted = 0;
    int golden = 0;
    int removed = 0;
    std::string first_violation;
    auto fail = [&](const std::string& what, int frame) {
        if (violations++ == 0) first_violation = what + " at frame " + std::to_string(frame);
    };

    for (int run = 0; run < runs; ++run) {
        PartBank bank;
        bank.cfg.n_max = 4 + run;
        bank.cfg.update_every = 10;
        bank.cfg.min_support = 5;
        std::map<std::uint64_t, double> quality;
        auto add_part = [&](PartState state, int frame) {
            FilterPart p;
            Eigen::VectorXd c(8);
            for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = u01(rng) - 0.5;
            p.classifier = c.normalized();
            p.geometry.scale_index = static_cast<int>(rng() % 3);
            p.state = state;
            p.birth_frame = frame;
            p.id = bank.next_id++;
            quality[p.id] = u01(rng);
            bank.parts.push_back(std::move(p));
        };
        for (int i = 0; i < 8; ++i) add_part(PartState::Reliable, 1);
        for (int i = 0; i < 8; ++i) add_part(PartState::Candidate, 1);

        const Point chosen{10.0, 10.0};
        for (int t = 2; t <= frames; ++t) {
            std::vector<std::optional<Peak>> peaks;
            for (const FilterPart& p : bank.parts) {
                const double roll = u01(rng);
                if (roll < quality[p.id]) peaks.push_back(Peak{10, 10, 1.0});
                else if (roll < 0.9) peaks.push_back(Peak{30, 2, 1.0});
                else peaks.push_back(std::nullopt);
            }
            std::map<std::uint64_t, std::pair<int, int>> gold_counts;
            for (const FilterPart& p : bank.parts)
                if (p.state == PartState::Gold) gold_counts[p.id] = {p.votes_cast, p.votes_agreeing};
            record_cooccurrence(bank, peaks, chosen, 3.0);
            for (const FilterPart& p : bank.parts) {
                if (p.reliability() < 0.0 || p.reliability() > 1.0) fail("reliability outside [0,1]", t);
                if (p.state == PartState::Gold && gold_counts[p.id] != std::make_pair(p.votes_cast, p.votes_agreeing))
                    fail("gold part monitored", t);
            }

            if (t % 25 == 0) {
                // candidates carry strong evidence, voters none: the aggregate must stay empty
                PartResponses resp;
                int expected_voters = 0;
                for (const FilterPart& p : bank.parts) {
                    VoteMap m(8, 8, MapKind::FilterParts);
                    if (!p.votes()) m.values.setConstant(1000.0);
                    expected_voters += p.votes();
                    resp.maps.push_back(m);
                    resp.peaks.push_back(std::nullopt);
                }
                const Aggregate agg = aggregate_votes(bank, resp, 1.0);
                if (agg.voters != expected_voters) fail("voter count includes candidates", t);
                if (agg.voters > 0 && agg.map.values.maxCoeff() != 0.0) fail("candidate reached the aggregate", t);
            }

            if (t % bank.cfg.update_every != 0) continue;
            std::map<std::uint64_t, PartState> before;
            for (const FilterPart& p : bank.parts) before[p.id] = p.state;
            lifecycle_update(bank, t);
            std::map<std::uint64_t, PartState> after;
            for (const FilterPart& p : bank.parts) {
                after[p.id] = p.state;
                const PartState was = before.at(p.id);
                const bool ok = was == p.state || (was == PartState::Candidate && p.state == PartState::Reliable) ||
                                (was == PartState::Reliable && p.state == PartState::Gold);
                if (!ok) fail("illegal transition", t);
                promoted += was == PartState::Candidate && p.state == PartState::Reliable;
                golden += was == PartState::Reliable && p.state == PartState::Gold;
                if (p.state != PartState::Gold && (p.votes_cast != 0 || p.votes_agreeing != 0))
                    fail("counters not reset", t);
            }
            for (const auto& [id, state] : before) {
                if (after.count(id)) continue;
                ++removed;
                if (state == PartState::Gold) fail("gold part removed by lifecycle", t);
            }

            enforce_budget(bank);
            for (const auto& [id, state] : after) {
                if (state != PartState::Gold) continue;
                bool present = false;
                for (const FilterPart& p : bank.parts) present |= p.id == id && p.state == PartState::Gold;
                if (!present) fail("gold part removed by budget", t);
            }
            for (int s = 0; s < 3; ++s) {
                int voters = 0;
                for (const FilterPart& p : bank.parts) voters += p.geometry.scale_index == s && p.votes();
                if (voters > bank.cfg.n_max) fail("budget exceeded", t);
            }
            ++r.trials;
            const int fresh = static_cast<int>(rng() % 5);
            for (int i = 0; i < fresh; ++i) add_part(PartState::Candidate, t);
        }
    }
    r.worst = violations;
    r.passed = violations == 0 && promoted > 0 && golden > 0 && removed > 0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d violations; %d promoted, %d to gold, %d removed", violations, promoted, golden,
                  removed);
    r.detail = buf;
    if (!first_violation.empty()) r.detail += "; first: " + first_violation;
    r.seconds = seconds_since(t0);
    return r;
}

std::vector<SuiteResult> run_all() {
    return {rescale_suite(), primal_dual_suite(), gradient_suite(), overfit_suite(), lifecycle_suite()};
}

std::string format(const SuiteResult& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s %-20s worst=%.3g bound=%.3g (%d trials, %.2fs) %s", r.passed ? "PASS" : "FAIL",
                  r.name.c_str(), r.worst, r.bound, r.trials, r.seconds, r.detail.c_str());
    return buf;
}

}  // namespace cotrack::selftest
