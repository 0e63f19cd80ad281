#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace alignet {

// FNV-1a 64-bit; used for input manifests and the transform hash stamped
// into AligNet dataset headers.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xCBF29CE484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

std::uint64_t hash_file(const std::string& path);

std::string hex64(std::uint64_t value);

} // namespace alignet
