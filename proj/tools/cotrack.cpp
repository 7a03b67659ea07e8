#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cotrack/benchmark.hpp"
#include "cotrack/config.hpp"
#include "cotrack/error.hpp"
#include "cotrack/outputs.hpp"
#include "cotrack/selftest.hpp"
#include "cotrack/synth.hpp"

using namespace cotrack;
namespace fs = std::filesystem;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

TrackerConfig load(const std::string& path) {
    TrackerConfig cfg = path.empty() ? TrackerConfig{} : load_config(path);
    validate(cfg);
    return cfg;
}

void print_report(const MetricsReport& r) {
    std::printf("%-24s frames=%zu failures=%d accuracy=%.3f eao=%.3f step=%.1fms\n", r.sequence.c_str(), r.frames.size(),
                r.failures, r.accuracy, r.eao, r.mean_step_ms);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = std::min(text.find(',', start), text.size());
        const std::string tok = text.substr(start, end - start);
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(tok, &used);
        } catch (...) {
            used = 0;
        }
        if (tok.empty() || used != tok.size()) throw InvalidInput("--seeds: bad seed '" + tok + "'");
        seeds.push_back(v);
        start = end + 1;
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cotrack: part-based visual tracker with a convolutional second pathway"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 1;

    auto* track = app.add_subcommand("track", "Track one sequence directory and write per-frame outputs");
    std::string seq_dir;
    std::string out_dir = "cotrack_out";
    bool overlay = false, votemaps = false, reinit_track = false;
    track->add_option("sequence", seq_dir, "Directory with frames and groundtruth.txt")->required();
    track->add_option("--config", config_path, "key = value settings file");
    track->add_option("--out", out_dir, "Output directory")->capture_default_str();
    track->add_option("--seed", seed, "Tracker seed")->capture_default_str();
    track->add_flag("--overlay", overlay, "Write overlay_*.ppm for every frame");
    track->add_flag("--votemaps", votemaps, "Write filter_/net_/fused_*.pgm vote maps");
    track->add_flag("--reinit", reinit_track, "Re-initialize from ground truth after a miss");

    auto* synth = app.add_subcommand("synth", "Render a synthetic scenario to a sequence directory");
    std::string scenario_name;
    std::string synth_out;
    synth->add_option("scenario", scenario_name, "A, B, C, D or L")->required();
    synth->add_option("--seed", seed, "Scene seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Output directory")->required();

    auto* bench = app.add_subcommand("bench", "Benchmark sequence directories");
    std::vector<std::string> bench_dirs;
    bool reinit = false;
    bench->add_option("sequences", bench_dirs, "Sequence directories")->required();
    bench->add_flag("--reinit", reinit, "Re-initialize from ground truth after a miss");
    bench->add_option("--config", config_path, "key = value settings file");
    bench->add_option("--seed", seed, "Tracker seed")->capture_default_str();

    auto* ablate = app.add_subcommand("ablate", "Run an ablation suite on the synthetic scenarios");
    std::string suite;
    std::string seeds_text = "1,2,3";
    std::vector<std::string> scenarios;
    ablate->add_option("suite", suite, "pathways, roles or hcf")->required();
    ablate->add_option("--seeds", seeds_text, "Comma-separated seeds")->capture_default_str();
    ablate->add_option("--scenarios", scenarios, "Comma-separated scenario names (default A,B,C,D)")->delimiter(',');
    ablate->add_option("--config", config_path, "Base settings file");

    auto* selftest_cmd = app.add_subcommand("selftest", "Run the solver, gradient and lifecycle property suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*track) {
            const Sequence seq = load_sequence(seq_dir);
            RunOutputs out;
            out.dir = out_dir;
            out.overlay = overlay;
            out.votemaps = votemaps;
            out.reinit = reinit_track;
            const RunSummary s = track_to_dir(seq, load(config_path), seed, out);
            print_report(s.report);
            std::printf("wrote %s", (fs::path(out_dir) / "track.csv").string().c_str());
            if (overlay) std::printf(", %d overlays", s.overlays);
            if (votemaps) std::printf(", %d vote-map sets", s.votemaps);
            std::printf("\n");
        } else if (*synth) {
            const Sequence seq = synth_sequence(standard_scenario(scenario_name), seed);
            save_sequence(seq, synth_out);
            std::printf("wrote %zu frames to %s\n", seq.size(), synth_out.c_str());
        } else if (*bench) {
            const TrackerConfig cfg = load(config_path);
            int failures = 0;
            double acc = 0.0;
            for (const auto& dir : bench_dirs) {
                const MetricsReport r = run_benchmark(load_sequence(dir), cfg, seed, reinit);
                print_report(r);
                failures += r.failures;
                acc += r.accuracy;
            }
            std::printf("total failures=%d mean accuracy=%.3f\n", failures, acc / static_cast<double>(bench_dirs.size()));
        } else if (*ablate) {
            const AblationReport r = run_ablation(suite, parse_seeds(seeds_text), scenarios, load(config_path));
            std::cout << r.format();
        } else if (*selftest_cmd) {
            bool ok = true;
            for (const auto& r : selftest::run_all()) {
                std::cout << selftest::format(r) << "\n";
                ok = ok && r.passed;
            }
            return ok ? 0 : 1;
        }
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitInvalid;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    }
    return 0;
}
