#pragma once

#include <cstdint>
#include <limits>

namespace specboot {

// splitmix64 finalizer, used both as a stand-alone mixer for deriving
// stream keys and to expand a 64-bit seed into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ generator. Satisfies UniformRandomBitGenerator, so the
/// <random> distributions work on top of it.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform01() { return double((*this)() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

/// Derive an independent stream key from a master seed and an index.
/// Each bootstrap replicate (or worker) owns the stream keyed by its
/// index, so results do not depend on scheduling.
inline std::uint64_t derive_stream_key(std::uint64_t master_seed,
                                       std::uint64_t index,
                                       std::uint64_t sub_index = 0) {
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (index * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL);
    std::uint64_t b = splitmix64(s);
    s = b ^ (sub_index + 0xd1b54a32d192ed03ULL);
    return splitmix64(s);
}

inline Xoshiro256pp derive_stream(std::uint64_t master_seed,
                                  std::uint64_t index,
                                  std::uint64_t sub_index = 0) {
    return Xoshiro256pp(derive_stream_key(master_seed, index, sub_index));
}

}  // namespace specboot
