#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cotrack/geometry.hpp"
#include "cotrack/image.hpp"

namespace cotrack {

/// Frames held in memory or as paths, with per-frame ground truth.
struct Sequence {
    std::string name;
    std::vector<Image> images;
    std::vector<std::filesystem::path> paths;
    std::vector<std::optional<Box>> groundtruth;

    std::size_t size() const { return images.empty() ? paths.size() : images.size(); }
    Image frame(std::size_t i) const;
    bool has_full_groundtruth() const;
};

/// "x,y,w,h" or an 8-number polygon (bounded); blank, NaN or all-zero lines mean no box.
std::optional<Box> parse_groundtruth_line(const std::string& line);

/// Sorted image files plus groundtruth.txt from `dir`.
Sequence load_sequence(const std::filesystem::path& dir);

/// Writes frames as 00000001.pgm/.ppm ... and groundtruth.txt.
void save_sequence(const Sequence& seq, const std::filesystem::path& dir);

}  // namespace cotrack
