#pragma once

#include <cstdint>
#include <vector>

namespace synthdr {

// PCG32 (www.pcg-random.org). Hand-rolled instead of <random> because the
// outputs must be identical across standard libraries and runs; every sampled
// value in a dataset is derived from (seed, image index, purpose) substreams.
class Rng {
public:
    Rng() : Rng(0x853c49e6748fea9bULL, 0xda3e39cb94b95bdbULL) {}

    Rng(uint64_t initstate, uint64_t initseq) {
        state_ = 0u;
        inc_ = (initseq << 1u) | 1u;
        next_u32();
        state_ += initstate;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Multiply-shift bound; deterministic and
    // bias is negligible for the small n used here.
    uint32_t uniform_int(uint32_t n) {
        return static_cast<uint32_t>((static_cast<uint64_t>(next_u32()) * n) >> 32);
    }

    bool chance(double p) { return uniform() < p; }

private:
    uint64_t state_;
    uint64_t inc_;
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent substream for (seed, stream). Distinct streams of one seed are
// uncorrelated PCG sequences, so per-image / per-pixel work can run in any
// order on any number of threads with identical results.
inline Rng make_stream(uint64_t seed, uint64_t stream) {
    return Rng(splitmix64(seed), splitmix64(stream) ^ (stream << 1));
}

// Substream purposes for one image index.
enum class StreamPurpose : uint64_t {
    scene = 0,
    postfx = 1,
    render = 2,
};

inline Rng image_stream(uint64_t seed, uint64_t image_index, StreamPurpose purpose) {
    return make_stream(seed, image_index * 8 + static_cast<uint64_t>(purpose));
}

// Deterministic Fisher-Yates (std::shuffle is implementation-defined).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = rng.uniform_int(static_cast<uint32_t>(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace synthdr
