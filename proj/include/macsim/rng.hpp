#pragma once

#include <cstdint>
#include <random>

namespace macsim {

/// Independent generator streams derived from one run seed.
enum class Stream : std::uint64_t { Inputs = 1, Scheduler = 2, Adversary = 3, Coin = 4 };

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

}  // namespace macsim
