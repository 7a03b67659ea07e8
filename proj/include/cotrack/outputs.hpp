#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "cotrack/benchmark.hpp"
#include "cotrack/image.hpp"
#include "cotrack/votemap.hpp"

namespace cotrack {

inline constexpr const char* kCsvHeader = "frame,x,y,w,h,iou,dt,hcf,cand,rel,gold";

/// One line per frame (1-based frame numbers); absent values print as "nan".
void write_csv(std::ostream& out, const MetricsReport& report);
void write_csv(const std::filesystem::path& path, const MetricsReport& report);

/// Color copy of `frame` with the box and the pathway centers drawn.
Image render_overlay(const Image& frame, const Box& box, const StepDiagnostics* diag);

/// Map scaled so its maximum is 255 (all-zero maps stay black).
Image votemap_image(const VoteMap& map);

struct RunOutputs {
    std::filesystem::path dir;  // created when missing
    bool overlay = false;       // overlay_NNNNNNNN.ppm for every frame
    bool votemaps = false;      // filter_/net_/fused_NNNNNNNN.pgm for every stepped frame
    bool reinit = false;
};

struct RunSummary {
    MetricsReport report;
    int overlays = 0;
    int votemaps = 0;
};

/// Tracks `seq` and writes track.csv plus the requested images into `out.dir`.
RunSummary track_to_dir(const Sequence& seq, const TrackerConfig& cfg, std::uint64_t seed, const RunOutputs& out);

}  // namespace cotrack
