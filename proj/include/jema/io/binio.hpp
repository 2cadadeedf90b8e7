#pragma once

// Little-endian binary serialization helpers shared by the persisted model
// formats. Explicit byte order so files move between hosts.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "jema/error.hpp"

namespace jema {
namespace io {

// FNV-1a over a byte range; checkpoint trailers and run manifests use it.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 14695981039346656037ull) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline void write_bytes(std::ostream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!os) fail("binary write failed");
}

inline void read_exact(std::istream& is, void* data, std::size_t n, const char* what) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        fail("truncated file: expected ", n, " bytes of ", what);
}

inline void write_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    write_bytes(os, b, 4);
}

inline void write_u64le(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    write_bytes(os, b, 8);
}

inline void write_f64le(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64le(os, bits);
}

inline std::uint32_t read_u32le(std::istream& is, const char* what) {
    unsigned char b[4];
    read_exact(is, b, 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64le(std::istream& is, const char* what) {
    unsigned char b[8];
    read_exact(is, b, 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64le(std::istream& is, const char* what) {
    const std::uint64_t bits = read_u64le(is, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_u32le(os, static_cast<std::uint32_t>(s.size()));
    if (!s.empty()) write_bytes(os, s.data(), s.size());
}

inline std::string read_string(std::istream& is, const char* what) {
    const std::uint32_t len = read_u32le(is, what);
    if (len > (1u << 20)) fail("corrupt file: ", what, " length ", len, " is implausible");
    std::string s(len, '\0');
    if (len > 0) read_exact(is, s.data(), len, what);
    return s;
}

} // namespace io
} // namespace jema
