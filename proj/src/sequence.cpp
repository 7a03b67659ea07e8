#include "cotrack/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cotrack/error.hpp"

namespace cotrack {

Image Sequence::frame(std::size_t i) const {
    if (i >= size()) throw InvalidInput("sequence '" + name + "': frame index out of range");
    return images.empty() ? read_image(paths[i]) : images[i];
}

bool Sequence::has_full_groundtruth() const {
    return groundtruth.size() >= size() &&
           std::all_of(groundtruth.begin(), groundtruth.begin() + static_cast<std::ptrdiff_t>(size()),
                       [](const auto& b) { return b.has_value(); });
}

std::optional<Box> parse_groundtruth_line(const std::string& line) {
    std::string s = line;
    std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\t' || c == '\r'; }, ' ');
    std::istringstream in(s);
    std::vector<double> v;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw InvalidInput("");
        } catch (...) {
            throw InvalidInput("groundtruth: bad number '" + tok + "'");
        }
    }
    if (v.empty()) return std::nullopt;
    if (std::any_of(v.begin(), v.end(), [](double x) { return !std::isfinite(x); })) return std::nullopt;
    Box b;
    if (v.size() == 4) {
        b = {v[0], v[1], v[2], v[3]};
    } else if (v.size() == 8) {
        const double x0 = std::min({v[0], v[2], v[4], v[6]});
        const double x1 = std::max({v[0], v[2], v[4], v[6]});
        const double y0 = std::min({v[1], v[3], v[5], v[7]});
        const double y1 = std::max({v[1], v[3], v[5], v[7]});
        b = {x0, y0, x1 - x0, y1 - y0};
    } else {
        throw InvalidInput("groundtruth: expected 4 or 8 numbers, got " + std::to_string(v.size()));
    }
    if (b.w <= 0.0 || b.h <= 0.0) return std::nullopt;
    return b;
}

Sequence load_sequence(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw InvalidInput("not a sequence directory: " + dir.string());
    Sequence seq;
    seq.name = dir.filename().string();
    if (seq.name.empty()) seq.name = dir.parent_path().filename().string();
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && is_supported_image(entry.path())) seq.paths.push_back(entry.path());
    std::sort(seq.paths.begin(), seq.paths.end());
    if (seq.paths.size() < 2) throw InvalidInput("sequence needs at least 2 frames: " + dir.string());

    std::ifstream gt(dir / "groundtruth.txt");
    if (!gt) throw InvalidInput("missing groundtruth.txt in " + dir.string());
    std::string line;
    while (std::getline(gt, line) && seq.groundtruth.size() < seq.paths.size())
        seq.groundtruth.push_back(parse_groundtruth_line(line));
    seq.groundtruth.resize(seq.paths.size());
    if (!seq.groundtruth.front()) throw InvalidInput("groundtruth.txt has no box for the first frame");
    return seq;
}

void save_sequence(const Sequence& seq, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream gt(dir / "groundtruth.txt");
    if (!gt) throw InvalidInput("cannot write " + (dir / "groundtruth.txt").string());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const Image img = seq.frame(i);
        char name[32];
        std::snprintf(name, sizeof name, "%08zu.%s", i + 1, img.channels == 1 ? "pgm" : "ppm");
        write_pnm(dir / name, img);
        const auto& b = i < seq.groundtruth.size() ? seq.groundtruth[i] : std::nullopt;
        if (b) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", b->x, b->y, b->w, b->h);
            gt << buf;
        } else {
            gt << "nan,nan,nan,nan\n";
        }
    }
}

}  // namespace cotrack
