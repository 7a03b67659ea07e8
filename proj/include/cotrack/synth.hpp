#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cotrack/geometry.hpp"
#include "cotrack/sequence.hpp"

namespace cotrack {

struct OccluderScript {
    int enter = -1;  // first covered frame, 0-based; negative disables
    int exit = -1;   // first uncovered frame
    double coverage = 1.0;  // fraction of the object width hidden, from the left
};

struct ScenarioSpec {
    std::string name = "custom";
    int width = 200;
    int height = 150;
    int length = 120;
    int object_w = 16;
    int object_h = 16;
    Point start{92.0, 67.0};          // object top-left at frame 0
    std::vector<Point> velocity;      // per-frame step; the last entry repeats, walls reflect
    double drift_rate = 0.0;          // blend weight toward the second texture per frame
    OccluderScript occluder;
    int distractors = 0;
    double similarity = 0.0;          // distractor texture blend toward the object's
    double distractor_radius = 2.0;   // orbit semi-major axis in object sizes
    double distractor_flatness = 0.3; // minor / major axis
};

/// Throws InvalidInput on scripts that leave the canvas or a length under 30.
void validate(const ScenarioSpec& spec);

/// Gray frames with exact integer ground truth; bit-identical per (spec, seed).
Sequence synth_sequence(const ScenarioSpec& spec, std::uint64_t seed);

/// Standard set: "A" translation + drift, "B" occlusion, "C" distractors, "D" abrupt motion.
/// "L" is a 200-frame translation run for HCF statistics, outside the standard set.
ScenarioSpec standard_scenario(const std::string& name);
std::vector<std::string> standard_scenario_names();

}  // namespace cotrack
