#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cotrack {

/// 8-bit image, interleaved channels (1 = gray, 3 = RGB), row-major.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, int c, std::uint8_t fill = 0);

    std::uint8_t& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    std::uint8_t at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

    /// Luma in [0, 255]; equals the sample for gray images.
    double gray(int x, int y) const;

    bool empty() const { return data.empty(); }
    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
};

/// Reads binary PGM (P5) / PPM (P6) with maxval 255, and PNG when built with libpng.
Image read_image(const std::filesystem::path& path);

/// Writes P5 for one channel and P6 for three.
void write_pnm(const std::filesystem::path& path, const Image& img);

/// Image file extensions accepted by read_image.
bool is_supported_image(const std::filesystem::path& path);

/// Outline of an axis-aligned rectangle, clipped to the image.
void draw_rect(Image& img, double x, double y, double w, double h, const std::uint8_t* color);

/// Small plus-shaped marker, clipped to the image.
void draw_cross(Image& img, double cx, double cy, int arm, const std::uint8_t* color);

}  // namespace cotrack
