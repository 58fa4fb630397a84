#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace hetsim {

// SplitMix64 step; used to derive decorrelated seeds for substreams.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seedable 64-bit generator with independent, deterministic substreams.
//
// All variates are produced by hand-written transforms of the raw engine
// output, so a given (seed, stream) pair yields identical sequences across
// standard library implementations.
class RandomStream {
public:
    static constexpr std::string_view generator_id = "mt19937_64+splitmix64-substreams";

    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), engine_(derive(seed, stream))
    {
    }

    // Substream `index` of this stream; independent of how much of this stream was consumed.
    [[nodiscard]] RandomStream split(std::uint64_t index) const
    {
        std::uint64_t s = derive(seed_, stream_) ^ (0xD1B54A32D192ED03ULL * (index + 1));
        return RandomStream(splitmix64(s), index);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer on [0, n); n > 0. Rejection sampling, no modulo bias.
    std::uint64_t uniform_index(std::uint64_t n)
    {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

private:
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream)
    {
        std::uint64_t s = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
        splitmix64(s);
        return splitmix64(s);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

}  // namespace hetsim
