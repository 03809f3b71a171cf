#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pdqsign {

// Deterministic stream derivation.
//
// Every random quantity in the library is drawn from an engine derived from
// (master seed, index path), where the index path encodes replication number,
// sample membership, purpose tag, draw index, and so on.  Replication r of a
// study therefore consumes an identical stream no matter how many OpenMP
// workers run, which is what makes study output byte-reproducible.

namespace rng_detail {

// splitmix64 output function (Steele, Lea & Flood); also a strong 64-bit
// finalizer, which is how we use it for key mixing.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t key, std::uint64_t id) {
    // Hash-combine: decorrelates (key, id) pairs so that adjacent ids give
    // unrelated streams.
    return mix64(key ^ (0x9e3779b97f4a7c15ULL + (id << 1)));
}

}  // namespace rng_detail

// Purpose tags keeping the streams of distinct pipeline stages disjoint.
// Adding a stage (or a method that consumes a new tag) leaves every other
// stage's draws untouched.
namespace stream {
inline constexpr std::uint64_t kSample1 = 1;
inline constexpr std::uint64_t kSample2 = 2;
inline constexpr std::uint64_t kBootstrap = 3;
inline constexpr std::uint64_t kMoments = 4;
inline constexpr std::uint64_t kGamma = 5;
inline constexpr std::uint64_t kQuantile = 6;
inline constexpr std::uint64_t kShuffle = 7;
}  // namespace stream

// Derives a 64-bit stream key from a master seed and an index path.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = rng_detail::mix64(seed);
    for (std::uint64_t id : path) key = rng_detail::combine(key, id);
    return key;
}

// Full-period 64-bit engine with splitmix64 state transition.  Statistically
// solid for sign flips and light-duty draws, and cheap enough to construct
// one per bootstrap draw.
class SplitMix64 {
  public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::uint64_t state_;
};

// Mersenne twister seeded from a derived key; used wherever many draws from
// continuous distributions are consumed (sampling observations, Monte Carlo
// moment oracles, chi-square draws).
inline std::mt19937_64 make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = stream_key(seed, path);
    // Spread the key into four words so the twister state is well filled.
    std::uint64_t w0 = rng_detail::mix64(key);
    std::uint64_t w1 = rng_detail::mix64(w0);
    std::uint64_t w2 = rng_detail::mix64(w1);
    std::uint64_t w3 = rng_detail::mix64(w2);
    std::seed_seq seq{
        static_cast<std::uint32_t>(w0), static_cast<std::uint32_t>(w0 >> 32),
        static_cast<std::uint32_t>(w1), static_cast<std::uint32_t>(w1 >> 32),
        static_cast<std::uint32_t>(w2), static_cast<std::uint32_t>(w2 >> 32),
        static_cast<std::uint32_t>(w3), static_cast<std::uint32_t>(w3 >> 32)};
    return std::mt19937_64(seq);
}

inline std::mt19937_64 make_engine(std::uint64_t key) {
    return make_engine(key, {});
}

}  // namespace pdqsign
