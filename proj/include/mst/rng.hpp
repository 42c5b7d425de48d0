#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mst {

/// SplitMix64 output function. The generator used throughout the library is
/// a counter-based stream: draw i of stream `key` is `splitmix64(key + i * gamma)`.
/// See docs/FORMATS.md for the exact definition.
std::uint64_t splitmix64(std::uint64_t z);

/// Derives an independent stream key from a parent key and a tag.
std::uint64_t derive_key(std::uint64_t key, std::uint64_t tag);

class CounterRng {
public:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer on the closed range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    /// Standard normal via Box-Muller (one output per two uniforms).
    double normal();
    /// Samples an index with probability proportional to `weights`.
    std::size_t categorical(std::span<const double> weights);

    /// A child stream keyed by `tag`; does not advance this stream.
    CounterRng substream(std::uint64_t tag) const;

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    struct FromKey {};
    CounterRng(FromKey, std::uint64_t key) : key_(key) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle driven by CounterRng, so orderings are portable.
template <typename T>
void shuffle(std::vector<T>& values, CounterRng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(values[i - 1], values[j]);
    }
}

} // namespace mst
