#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "cotrack/convnet.hpp"
#include "cotrack/features.hpp"
#include "cotrack/filterparts.hpp"

namespace cotrack {

enum class PathwayMode { Combined, FilterPartsOnly, ConvNetOnly };
enum class NetUpdate { Hcf, None, Full };

struct TrackerConfig {
    double alpha = 0.6;              // FilterParts weight in the fused map
    int bootstrap_frames = 20;       // N
    double hcf_percentile = 0.11;
    int hcf_min_history = 20;
    double sigma_g = 2.0;            // smoothing of F, feature pixels
    double mask_sigma_fraction = 0.25;  // of the search side
    double search_factor = 3.0;
    int max_search_side = 96;        // larger regions are resampled down
    double agreement_fraction = 0.05;
    double agreement_min_px = 3.0;
    PartBankConfig parts;            // parts.update_every is U
    FeatureConfig features;
    convnet::ChannelPlan plan;
    convnet::AdamConfig adam{.lr = 1e-3};  // desk-scale nets need far more than 1e-5
    int epochs = 10;
    double shift_fraction = 0.2;     // augmentation bound, of the crop side
    double target_fraction = 0.125;  // disc radius, of the crop side; 0 = max(2 px, 5%)
    PathwayMode pathways = PathwayMode::Combined;
    NetUpdate net_update = NetUpdate::Hcf;

    int update_every() const { return parts.update_every; }
};

/// Applies one `key = value` setting; unknown keys and bad values throw InvalidInput.
void apply_setting(TrackerConfig& cfg, const std::string& key, const std::string& value);

/// Reads `key = value` lines; '#' starts a comment, blank lines are ignored.
TrackerConfig parse_config(std::istream& in, TrackerConfig base = {});
TrackerConfig load_config(const std::string& path, TrackerConfig base = {});

/// Every setting as `key = value` lines, in a fixed order.
std::string format_config(const TrackerConfig& cfg);

/// Checks ranges and cross-field constraints.
void validate(const TrackerConfig& cfg);

const char* to_string(PathwayMode m);
const char* to_string(NetUpdate u);

}  // namespace cotrack
