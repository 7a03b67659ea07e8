#pragma once

// Little-endian primitives shared by the snapshot formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

#include "cotrack/error.hpp"

namespace cotrack::binio {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    out.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw InvalidInput("snapshot: unexpected end of data");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline void put_i32(std::ostream& out, std::int32_t v) { put_u32(out, static_cast<std::uint32_t>(v)); }
inline std::int32_t get_i32(std::istream& in) { return static_cast<std::int32_t>(get_u32(in)); }

inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

inline void put_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    put_u32(out, static_cast<std::uint32_t>(bits & 0xFFFFFFFFu));
    put_u32(out, static_cast<std::uint32_t>(bits >> 32));
}
inline double get_f64(std::istream& in) {
    const std::uint64_t lo = get_u32(in);
    const std::uint64_t hi = get_u32(in);
    return std::bit_cast<double>(lo | (hi << 32));
}

inline void put_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }
inline void expect_magic(std::istream& in, const char (&magic)[5]) {
    char b[4];
    if (!in.read(b, 4) || std::char_traits<char>::compare(b, magic, 4) != 0)
        throw InvalidInput(std::string("snapshot: bad magic, expected ") + magic);
}

}  // namespace cotrack::binio
