#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "lcpd/common.hpp"

namespace lcpd {

/// SplitMix64 finalizer; a fixed public mixing function.
std::uint64_t mix64(std::uint64_t x);

/// Seed of an independent stream identified by (master, cell, replicate).
/// Pure function of its arguments, so replicate r draws the same numbers no
/// matter which worker runs it or in which order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t replicate);

/// Stable 64-bit identifier of a textual cell label (FNV-1a).
std::uint64_t label_hash(std::string_view label);

/// Seeded source of standard normal variates.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed);

    double next() { return normal_(engine_); }

    /// p x n matrix of i.i.d. N(0,1), filled column by column.
    Matrix matrix(Index rows, Index cols);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lcpd
