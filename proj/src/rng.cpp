#include "mst/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mst {

std::uint64_t splitmix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t key, std::uint64_t tag) {
    return splitmix64(key ^ splitmix64(tag + CounterRng::kGamma));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(derive_key(seed, stream)) {}

std::uint64_t CounterRng::next_u64() {
    ++counter_;
    return splitmix64(key_ + counter_ * kGamma);
}

double CounterRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::int64_t CounterRng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) {
        throw std::invalid_argument("uniform_int: empty range");
    }
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) {
        return static_cast<std::int64_t>(next_u64());
    }
    // Multiply-shift reduction; the bias is below 2^-64 * span.
    const auto wide = static_cast<unsigned __int128>(next_u64()) * span;
    return lo + static_cast<std::int64_t>(wide >> 64);
}

double CounterRng::normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t CounterRng::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    if (weights.empty() || !(total > 0.0)) {
        throw std::invalid_argument("categorical: weights must have positive sum");
    }
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) {
            return i;
        }
    }
    // Rounding can leave u == total; fall back to the last positive weight.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) {
            return i;
        }
    }
    return weights.size() - 1;
}

CounterRng CounterRng::substream(std::uint64_t tag) const {
    return CounterRng(FromKey{}, derive_key(key_, tag));
}

} // namespace mst
