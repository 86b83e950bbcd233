#pragma once

#include <cstdint>
#include <random>

namespace seqctl {

// splitmix64; used to derive independent substreams from a named seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic engine for substream (hypothesis, replication) of a named seed.
inline std::mt19937_64 substream_engine(std::uint64_t seed, std::uint64_t hypothesis,
                                        std::uint64_t replication) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= hypothesis * 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(s);
    s ^= replication * 0xd1b54a32d192ed03ULL;
    std::uint64_t c = splitmix64(s);
    std::seed_seq seq{static_cast<unsigned>(a), static_cast<unsigned>(a >> 32),
                      static_cast<unsigned>(b), static_cast<unsigned>(b >> 32),
                      static_cast<unsigned>(c), static_cast<unsigned>(c >> 32)};
    return std::mt19937_64(seq);
}

} // namespace seqctl
