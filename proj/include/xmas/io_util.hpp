#ifndef XMAS_IO_UTIL_HPP
#define XMAS_IO_UTIL_HPP

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace xmas {

uint32_t crc32(const void* data, std::size_t len, uint32_t seed = 0);

inline void append_u32le(std::string& out, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.append(b, 4);
}

inline uint32_t read_u32le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

inline void append_f32le(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    append_u32le(out, bits);
}

inline float read_f32le(const unsigned char* p) {
    const uint32_t bits = read_u32le(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

// Whole-file read/write with write-temp-then-rename atomicity.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& bytes);

} // namespace xmas

#endif
