#pragma once

// Per-frame orchestration of the two pathways: vote maps, fusion, center and
// box update, HCF gating and the periodic part / network updates.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "cotrack/config.hpp"
#include "cotrack/convnet.hpp"
#include "cotrack/filterparts.hpp"
#include "cotrack/fusion.hpp"
#include "cotrack/image.hpp"

namespace cotrack {

using Sample = convnet::TrainSample<float>;

struct TrackerState {
    TrackerConfig cfg;
    std::uint64_t seed = 0;
    int frame = 0;  // 1-based index of the last processed frame
    int frame_width = 0;
    int frame_height = 0;
    Point center;   // l_t, frame coordinates
    Box box;
    Box reference;  // initialization box; affine box fits are relative to its size
    int crop_side = 0;        // feature pixels
    double frame_side = 0.0;  // frame pixels covered by the crop
    PartBank bank;
    convnet::ConvNet<float> net;
    convnet::AdamState<float> adam;
    std::deque<Sample> hcf_buffer;  // newest last, capacity bootstrap_frames
    std::vector<Sample> archive;    // first N frames
    std::vector<double> distances;  // every d_t, append-only
    int hcf_frames = 0;
    std::mt19937_64 rng;

    int net_factor() const { return cfg.plan.downsample(); }
};

struct StepDiagnostics {
    int frame = 0;
    Point center;  // chosen, frame coordinates
    Box box;
    std::optional<Point> filter_center;  // refined pathway peaks, frame coordinates
    std::optional<Point> net_center;
    std::optional<double> distance;      // d_t, frame pixels
    bool hcf = false;
    bool degenerate = false;
    bool bootstrap = false;
    double alpha = 0.0;                  // FilterParts weight used this frame
    double filter_peak = 0.0;
    double net_peak = 0.0;
    int voters = 0;
    int candidates = 0;
    int reliable = 0;
    int gold = 0;
    int matches = 0;                     // correspondences fed to the box estimate
    bool parts_updated = false;
    bool net_trained = false;
    CoordinateMap map;                   // crop to frame for the maps below
    std::optional<VoteMap> filter_map;   // kept only when requested
    std::optional<VoteMap> net_map;
    std::optional<VoteMap> fused_map;
};

/// Search crop side in feature pixels and the frame side it covers.
std::pair<int, double> search_geometry(const TrackerConfig& cfg, double box_w, double box_h);

TrackerState tracker_init(const Image& frame, const Box& box, const TrackerConfig& cfg, std::uint64_t seed);

StepDiagnostics tracker_step(TrackerState& state, const Image& frame, bool keep_maps = false);

/// Versioned debug dump of config, pose, parts and network. See docs/formats.md.
void write_snapshot(std::ostream& out, const TrackerState& state);

struct SnapshotInfo {
    std::string config_text;
    int frame = 0;
    Point center;
    Box box;
    std::vector<FilterPart> parts;
    convnet::ConvNet<float> net;
};

SnapshotInfo read_snapshot(std::istream& in);
void save_snapshot(const std::filesystem::path& path, const TrackerState& state);

}  // namespace cotrack
