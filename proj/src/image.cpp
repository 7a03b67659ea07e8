#include "cotrack/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "cotrack/error.hpp"

#ifdef COTRACK_HAVE_PNG
#include <png.h>
#endif

namespace cotrack {

Image::Image(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c),
      data(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 0 || h < 0 || (c != 1 && c != 3)) throw InvalidInput("Image: bad dimensions");
}

double Image::gray(int x, int y) const {
    if (channels == 1) return at(x, y);
    return 0.299 * at(x, y, 0) + 0.587 * at(x, y, 1) + 0.114 * at(x, y, 2);
}

namespace {

// Next whitespace-separated header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

int parse_dim(const std::string& tok, const std::filesystem::path& path) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v <= 0) throw InvalidInput("");
        return v;
    } catch (...) {
        throw InvalidInput("bad PNM header in " + path.string());
    }
}

Image read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open image " + path.string());
    const std::string magic = pnm_token(in);
    int channels = 0;
    if (magic == "P5") channels = 1;
    else if (magic == "P6") channels = 3;
    else throw InvalidInput("unsupported PNM type '" + magic + "' in " + path.string());
    const int w = parse_dim(pnm_token(in), path);
    const int h = parse_dim(pnm_token(in), path);
    const int maxval = parse_dim(pnm_token(in), path);
    if (maxval != 255) throw InvalidInput("only 8-bit PNM supported: " + path.string());
    Image img(w, h, channels);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
        throw InvalidInput("truncated image data in " + path.string());
    return img;
}

#ifdef COTRACK_HAVE_PNG
Image read_png(const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.string().c_str()))
        throw InvalidInput("cannot read PNG " + path.string());
    const bool gray = (png.format & PNG_FORMAT_FLAG_COLOR) == 0;
    png.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    Image img(static_cast<int>(png.width), static_cast<int>(png.height), gray ? 1 : 3);
    if (!png_image_finish_read(&png, nullptr, img.data.data(), 0, nullptr)) {
        png_image_free(&png);
        throw InvalidInput("cannot decode PNG " + path.string());
    }
    return img;
}
#endif

std::string lower_ext(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

}  // namespace

bool is_supported_image(const std::filesystem::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".pgm" || ext == ".ppm") return true;
#ifdef COTRACK_HAVE_PNG
    if (ext == ".png") return true;
#endif
    return false;
}

Image read_image(const std::filesystem::path& path) {
    const std::string ext = lower_ext(path);
#ifdef COTRACK_HAVE_PNG
    if (ext == ".png") return read_png(path);
#endif
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_pnm(path);
    throw InvalidInput("unsupported image format: " + path.string());
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << (img.channels == 1 ? "P5" : "P6") << '\n'
        << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw InvalidInput("write failed: " + path.string());
}

namespace {

void put(Image& img, int x, int y, const std::uint8_t* color) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    for (int c = 0; c < img.channels; ++c) img.at(x, y, c) = color[c];
}

}  // namespace

void draw_rect(Image& img, double x, double y, double w, double h, const std::uint8_t* color) {
    const int x0 = static_cast<int>(std::lround(x));
    const int y0 = static_cast<int>(std::lround(y));
    const int x1 = static_cast<int>(std::lround(x + w)) - 1;
    const int y1 = static_cast<int>(std::lround(y + h)) - 1;
    for (int xx = x0; xx <= x1; ++xx) {
        put(img, xx, y0, color);
        put(img, xx, y1, color);
    }
    for (int yy = y0; yy <= y1; ++yy) {
        put(img, x0, yy, color);
        put(img, x1, yy, color);
    }
}

void draw_cross(Image& img, double cx, double cy, int arm, const std::uint8_t* color) {
    const int x = static_cast<int>(std::lround(cx));
    const int y = static_cast<int>(std::lround(cy));
    for (int d = -arm; d <= arm; ++d) {
        put(img, x + d, y, color);
        put(img, x, y + d, color);
    }
}

}  // namespace cotrack
