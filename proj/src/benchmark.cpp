#include "cotrack/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <sstream>

#include "cotrack/error.hpp"
#include "cotrack/synth.hpp"

namespace cotrack {

const char* to_string(FrameStatus s) {
    switch (s) {
        case FrameStatus::Init: return "init";
        case FrameStatus::Tracked: return "tracked";
        case FrameStatus::Failed: return "failed";
        case FrameStatus::Skipped: return "skipped";
    }
    return "?";
}

void SocietyTracker::init(const Image& frame, const Box& box, int) {
    state_ = tracker_init(frame, box, cfg_, seed_);
    last_.reset();
}

Box SocietyTracker::step(const Image& frame, int) {
    if (!state_) throw InvalidInput("SocietyTracker: step before init");
    last_ = tracker_step(*state_, frame, keep_maps_);
    return last_->box;
}

Box OracleTracker::step(const Image&, int index) {
    if (index < 0 || static_cast<std::size_t>(index) >= gt_.size() || !gt_[static_cast<std::size_t>(index)])
        throw InvalidInput("OracleTracker: no ground truth for frame " + std::to_string(index));
    return *gt_[static_cast<std::size_t>(index)];
}

MetricsReport run_benchmark(const Sequence& seq, Tracker& tracker, bool reinit) {
    const int n = static_cast<int>(seq.size());
    if (n < 2) throw InvalidInput("run_benchmark: sequence needs at least 2 frames");
    if (seq.groundtruth.empty() || !seq.groundtruth.front()) throw InvalidInput("run_benchmark: no first-frame box");
    if (reinit && !seq.has_full_groundtruth()) throw InvalidInput("run_benchmark: reinit needs ground truth on every frame");

    MetricsReport rep;
    rep.sequence = seq.name;
    auto gt = [&](int i) -> std::optional<Box> {
        return static_cast<std::size_t>(i) < seq.groundtruth.size() ? seq.groundtruth[static_cast<std::size_t>(i)]
                                                                    : std::nullopt;
    };
    double step_ms = 0.0;
    int steps = 0;
    int reinit_at = 0;
    Box last = *gt(0);
    bool in_failure = false;
    for (int i = 0; i < n; ++i) {
        FrameRecord rec;
        rec.index = i;
        if (i < reinit_at) {
            rec.status = FrameStatus::Skipped;
            rec.box = last;
            rec.center = last.center();
            rep.frames.push_back(rec);
            continue;
        }
        const Image img = seq.frame(i);
        if (i == reinit_at) {
            if (!gt(i)) throw InvalidInput("run_benchmark: no box to initialize on at frame " + std::to_string(i));
            tracker.init(img, *gt(i), i);
            rec.status = FrameStatus::Init;
            rec.box = last = *gt(i);
            rec.center = rec.box.center();
            rec.iou = 1.0;
            in_failure = false;
        } else {
            const auto t0 = std::chrono::steady_clock::now();
            rec.box = last = tracker.step(img, i);
            rec.center = rec.box.center();
            step_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            ++steps;
            if (const StepDiagnostics* d = tracker.diagnostics()) {
                rec.center = d->center;
                rec.distance = d->distance;
                rec.hcf = d->hcf;
                rec.candidates = d->candidates;
                rec.reliable = d->reliable;
                rec.gold = d->gold;
            }
            if (const auto g = gt(i)) rec.iou = iou(rec.box, *g);
            const bool miss = rec.iou && *rec.iou <= 0.0;
            rec.status = miss ? FrameStatus::Failed : FrameStatus::Tracked;
            if (miss && (reinit || !in_failure)) ++rep.failures;
            in_failure = miss;
            if (miss && reinit) reinit_at = i + kSkipAfterFailure + 1;
        }
        rep.frames.push_back(rec);
    }
    double sum = 0.0;
    for (const FrameRecord& r : rep.frames)
        if (r.status == FrameStatus::Tracked && r.iou) {
            sum += *r.iou;
            ++rep.tracked_frames;
        }
    rep.accuracy = rep.tracked_frames > 0 ? sum / rep.tracked_frames : 0.0;
    rep.eao = eao_lite(rep.frames);
    rep.mean_step_ms = steps > 0 ? step_ms / steps : 0.0;
    return rep;
}

MetricsReport run_benchmark(const Sequence& seq, const TrackerConfig& cfg, std::uint64_t seed, bool reinit) {
    SocietyTracker tracker(cfg, seed);
    return run_benchmark(seq, tracker, reinit);
}

double eao_lite(const std::vector<FrameRecord>& frames, int snippet) {
    if (snippet < 1) throw InvalidInput("eao_lite: snippet length must be positive");
    const std::size_t count = frames.size() / static_cast<std::size_t>(snippet);
    if (count == 0) return 0.0;
    double total = 0.0;
    for (std::size_t s = 0; s < count; ++s) {
        bool failed = false;
        double sum = 0.0;
        for (std::size_t k = s * snippet; k < (s + 1) * snippet; ++k) {
            const FrameRecord& r = frames[k];
            if (r.status == FrameStatus::Failed) failed = true;
            if (!failed && r.status != FrameStatus::Skipped && r.iou) sum += *r.iou;
        }
        total += sum / snippet;
    }
    return total / static_cast<double>(count);
}

std::vector<std::string> ablation_suites() { return {"pathways", "roles", "hcf"}; }

std::vector<Variant> ablation_variants(const std::string& suite, const TrackerConfig& base) {
    std::vector<Variant> out;
    if (suite == "pathways") {
        out.push_back({"combined", base});
        TrackerConfig f = base;
        f.pathways = PathwayMode::FilterPartsOnly;
        out.push_back({"filterparts-only", f});
        TrackerConfig c = base;
        c.pathways = PathwayMode::ConvNetOnly;
        c.net_update = NetUpdate::Full;
        out.push_back({"convnet-only", c});
    } else if (suite == "roles") {
        out.push_back({"all-roles", base});
        TrackerConfig o = base;
        o.parts.single_role = true;
        out.push_back({"one-role", o});
    } else if (suite == "hcf") {
        out.push_back({"hcf-update", base});
        TrackerConfig n = base;
        n.net_update = NetUpdate::None;
        out.push_back({"no-update", n});
        TrackerConfig f = base;
        f.net_update = NetUpdate::Full;
        out.push_back({"full-update", f});
    } else {
        throw InvalidInput("unknown ablation suite '" + suite + "' (valid: pathways, roles, hcf)");
    }
    return out;
}

int AblationReport::failures(const std::string& variant, const std::string& scenario) const {
    int total = 0;
    for (const AblationCell& c : cells)
        if (c.variant == variant && c.scenario == scenario) total += c.failures;
    return total;
}

std::string AblationReport::format() const {
    std::vector<std::string> variants, scenarios;
    for (const AblationCell& c : cells) {
        if (std::find(variants.begin(), variants.end(), c.variant) == variants.end()) variants.push_back(c.variant);
        if (std::find(scenarios.begin(), scenarios.end(), c.scenario) == scenarios.end()) scenarios.push_back(c.scenario);
    }
    std::ostringstream os;
    os << "suite " << suite << "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %-8s %8s %9s %7s\n", "variant", "scenario", "failures", "accuracy", "eao");
    os << line;
    for (const auto& v : variants)
        for (const auto& s : scenarios) {
            int n = 0, fails = 0;
            double acc = 0.0, eao = 0.0;
            for (const AblationCell& c : cells)
                if (c.variant == v && c.scenario == s) {
                    ++n;
                    fails += c.failures;
                    acc += c.accuracy;
                    eao += c.eao;
                }
            if (n == 0) continue;
            std::snprintf(line, sizeof line, "%-18s %-8s %8d %9.3f %7.3f\n", v.c_str(), s.c_str(), fails, acc / n, eao / n);
            os << line;
        }
    for (const Verdict& v : verdicts) os << (v.holds ? "holds   " : "violated") << "  " << v.statement << "\n";
    return os.str();
}

AblationReport run_ablation(const std::string& suite, const std::vector<std::uint64_t>& seeds,
                            std::vector<std::string> scenarios, const TrackerConfig& base) {
    const std::vector<Variant> variants = ablation_variants(suite, base);
    if (seeds.empty()) throw InvalidInput("run_ablation: no seeds");
    if (scenarios.empty()) scenarios = standard_scenario_names();
    AblationReport rep;
    rep.suite = suite;
    for (const std::string& name : scenarios) {
        const ScenarioSpec spec = standard_scenario(name);
        for (std::uint64_t seed : seeds) {
            const Sequence seq = synth_sequence(spec, seed);
            for (const Variant& v : variants) {
                const MetricsReport m = run_benchmark(seq, v.cfg, seed, true);
                rep.cells.push_back({v.name, spec.name, seed, m.failures, m.accuracy, m.eao});
            }
        }
    }
    // Ordering claims: the first variant of each suite is expected to fail no more often than the rest.
    for (const std::string& name : scenarios) {
        const std::string scen = standard_scenario(name).name;
        const int best = rep.failures(variants.front().name, scen);
        for (std::size_t i = 1; i < variants.size(); ++i) {
            const int other = rep.failures(variants[i].name, scen);
            rep.verdicts.push_back({"scenario " + scen + ": failures(" + variants.front().name + ")=" +
                                        std::to_string(best) + " <= failures(" + variants[i].name +
                                        ")=" + std::to_string(other),
                                    best <= other});
        }
    }
    return rep;
}

}  // namespace cotrack
