#include "cotrack/outputs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "cotrack/error.hpp"

namespace cotrack {

namespace {
std::string frame_file(const char* prefix, int index, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%08d.%s", prefix, index + 1, ext);
    return buf;
}

// Forwards to the tracker and keeps what the image outputs need per frame.
class Recorder : public Tracker {
public:
    Recorder(SocietyTracker& inner, const RunOutputs& out) : inner_(inner), out_(out) {}
    void init(const Image& frame, const Box& box, int index) override { inner_.init(frame, box, index); }
    Box step(const Image& frame, int index) override {
        const Box b = inner_.step(frame, index);
        const StepDiagnostics* d = inner_.diagnostics();
        if (d) {
            centers[index] = *d;
            centers[index].filter_map.reset();
            centers[index].net_map.reset();
            centers[index].fused_map.reset();
            if (out_.votemaps) {
                const std::pair<const char*, const std::optional<VoteMap>*> maps[] = {
                    {"filter", &d->filter_map}, {"net", &d->net_map}, {"fused", &d->fused_map}};
                for (const auto& [name, m] : maps)
                    if (*m) write_pnm(out_.dir / frame_file(name, index, "pgm"), votemap_image(**m));
                ++votemaps;
            }
        }
        return b;
    }
    const StepDiagnostics* diagnostics() const override { return inner_.diagnostics(); }

    std::map<int, StepDiagnostics> centers;
    int votemaps = 0;

private:
    SocietyTracker& inner_;
    const RunOutputs& out_;
};

std::string number(const std::optional<double>& v, const char* fmt) {
    if (!v || !std::isfinite(*v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return buf;
}
}  // namespace

void write_csv(std::ostream& out, const MetricsReport& report) {
    out << kCsvHeader << "\n";
    for (const FrameRecord& r : report.frames) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d,%.3f,%.3f,%.3f,%.3f,", r.index + 1, r.box.x, r.box.y, r.box.w, r.box.h);
        out << buf << number(r.iou, "%.6f") << "," << number(r.distance, "%.4f") << "," << (r.hcf ? 1 : 0) << ","
            << r.candidates << "," << r.reliable << "," << r.gold << "\n";
    }
}

void write_csv(const std::filesystem::path& path, const MetricsReport& report) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    write_csv(out, report);
    if (!out) throw InvalidInput("write failed: " + path.string());
}

Image render_overlay(const Image& frame, const Box& box, const StepDiagnostics* diag) {
    Image out(frame.width, frame.height, 3);
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(x, y, c) = frame.channels == 3 ? frame.at(x, y, c) : frame.at(x, y, 0);
    static constexpr std::uint8_t kBox[3] = {255, 255, 0};
    static constexpr std::uint8_t kFilter[3] = {255, 0, 0};
    static constexpr std::uint8_t kNet[3] = {0, 160, 255};
    draw_rect(out, box.x, box.y, box.w, box.h, kBox);
    if (diag) {
        if (diag->filter_center) draw_cross(out, diag->filter_center->x, diag->filter_center->y, 3, kFilter);
        if (diag->net_center) draw_cross(out, diag->net_center->x, diag->net_center->y, 3, kNet);
    }
    return out;
}

Image votemap_image(const VoteMap& map) {
    Image out(map.width(), map.height(), 1);
    const double top = map.values.size() > 0 ? map.values.maxCoeff() : 0.0;
    if (!(top > 0.0)) return out;
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x)
            out.at(x, y) = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(map.at(x, y) / top, 0.0, 1.0)));
    return out;
}

RunSummary track_to_dir(const Sequence& seq, const TrackerConfig& cfg, std::uint64_t seed, const RunOutputs& out) {
    std::filesystem::create_directories(out.dir);
    SocietyTracker tracker(cfg, seed, out.votemaps);
    Recorder rec(tracker, out);
    RunSummary summary;
    summary.report = run_benchmark(seq, rec, out.reinit);
    write_csv(out.dir / "track.csv", summary.report);
    summary.votemaps = rec.votemaps;
    if (out.overlay) {
        for (const FrameRecord& r : summary.report.frames) {
            const auto it = rec.centers.find(r.index);
            const StepDiagnostics* d = it == rec.centers.end() ? nullptr : &it->second;
            write_pnm(out.dir / frame_file("overlay", r.index, "ppm"),
                      render_overlay(seq.frame(static_cast<std::size_t>(r.index)), r.box, d));
            ++summary.overlays;
        }
    }
    return summary;
}

}  // namespace cotrack
