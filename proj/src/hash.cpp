#include "alignet/hash.hpp"

#include <fstream>

#include "alignet/errors.hpp"

namespace alignet {

std::uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("IoFailure", "cannot open '" + path + "' for hashing");
    std::uint64_t h = 0xCBF29CE484222325ull;
    char buffer[1 << 16];
    while (in) {
        in.read(buffer, sizeof(buffer));
        h = fnv1a64(buffer, static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

} // namespace alignet
