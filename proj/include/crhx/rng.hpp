#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace crhx {

// SplitMix64 step; used only to mix seeds into generator state.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64_next(s);
    s ^= stream_id * 0xD1342543DE82EF95ULL;
    std::uint64_t b = splitmix64_next(s);
    return a ^ (b + 0x632BE59BD9B4E019ULL);
}

// One replication-owned variate stream. Identical (seed, stream_id) always
// reproduces the identical sequence; the mapping from raw words to doubles
// is spelled out here rather than delegated to <random> distributions so
// output is bit-stable across standard library implementations.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), gen_(mix_seed(seed, stream_id)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on (0, 1].
    double next_unit() {
        return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Inverse-CDF map, exposed so tests can pin u directly.
    static double exponential_from_unit(double u, double rate) {
        if (rate <= 0.0) {
            throw std::invalid_argument("exponential rate must be > 0");
        }
        return -std::log(u) / rate;
    }

    double exponential(double rate) {
        return exponential_from_unit(next_unit(), rate);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 gen_;
};

} // namespace crhx
