#include "lcpd/random.hpp"

#include <array>
#include <string_view>

namespace lcpd {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t replicate) {
    return mix64(mix64(mix64(master) ^ cell) ^ replicate);
}

std::uint64_t label_hash(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

NormalSource::NormalSource(std::uint64_t seed) {
    // Expand the 64-bit seed through seed_seq so nearby seeds give unrelated
    // engine states.
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(mix64(seed)), static_cast<std::uint32_t>(mix64(seed) >> 32)};
    engine_.seed(seq);
}

Matrix NormalSource::matrix(Index rows, Index cols) {
    Matrix z(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) z(i, j) = next();
    }
    return z;
}

}  // namespace lcpd
