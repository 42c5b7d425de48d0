#include "mst/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

using namespace mst;

TEST_SUITE("rng") {
    TEST_CASE("splitmix64 matches the reference sequence") {
        // Reference SplitMix64 seeded with 0: outputs are mix(gamma), mix(2 gamma), ...
        CHECK(splitmix64(CounterRng::kGamma) == 0xe220a8397b1dcdafULL);
        CHECK(splitmix64(2 * CounterRng::kGamma) == 0x6e789e6aa1b965f4ULL);
        CHECK(splitmix64(3 * CounterRng::kGamma) == 0x06c45d188009454fULL);
    }

    TEST_CASE("draw i of a stream is splitmix64(key + i * gamma)") {
        CounterRng rng(42, 3);
        const auto key = derive_key(42, 3);
        CHECK(rng.key() == key);
        for (std::uint64_t i = 1; i <= 5; ++i) {
            CHECK(rng.next_u64() == splitmix64(key + i * CounterRng::kGamma));
        }
        CHECK(rng.counter() == 5);
    }

    TEST_CASE("streams are reproducible and distinct") {
        CounterRng a(7, 1);
        CounterRng b(7, 1);
        CounterRng c(7, 2);
        int same = 0;
        for (int i = 0; i < 100; ++i) {
            const auto x = a.next_u64();
            CHECK(x == b.next_u64());
            same += x == c.next_u64();
        }
        CHECK(same == 0);
    }

    TEST_CASE("uniform moments and ranges") {
        CounterRng rng(1);
        double s = 0.0;
        double s2 = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double u = rng.uniform();
            REQUIRE(u >= 0.0);
            REQUIRE(u < 1.0);
            s += u;
            s2 += u * u;
        }
        // Mean 1/2 (sd of mean ~ 0.00065), second moment 1/3.
        CHECK(std::abs(s / n - 0.5) < 0.003);
        CHECK(std::abs(s2 / n - 1.0 / 3.0) < 0.003);
    }

    TEST_CASE("uniform_int covers the closed range evenly") {
        CounterRng rng(2);
        std::vector<int> counts(4, 0);
        const int n = 40000;
        for (int i = 0; i < n; ++i) {
            const auto v = rng.uniform_int(4, 7);
            REQUIRE(v >= 4);
            REQUIRE(v <= 7);
            ++counts[static_cast<std::size_t>(v - 4)];
        }
        // 3-sigma binomial bound around n/4.
        const double sd = std::sqrt(n * 0.25 * 0.75);
        for (int c : counts) {
            CHECK(std::abs(c - n / 4.0) < 3 * sd);
        }
        CHECK_THROWS(rng.uniform_int(3, 2));
    }

    TEST_CASE("normal has unit variance") {
        CounterRng rng(3);
        double s = 0.0;
        double s2 = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double z = rng.normal();
            s += z;
            s2 += z * z;
        }
        CHECK(std::abs(s / n) < 0.01);
        CHECK(std::abs(s2 / n - 1.0) < 0.02);
    }

    TEST_CASE("categorical frequencies follow weights") {
        CounterRng rng(4);
        const std::vector<double> w = {1.0, 0.0, 3.0};
        std::vector<int> counts(3, 0);
        const int n = 40000;
        for (int i = 0; i < n; ++i) {
            ++counts[rng.categorical(w)];
        }
        CHECK(counts[1] == 0);
        CHECK(std::abs(counts[0] - n * 0.25) < 3 * std::sqrt(n * 0.25 * 0.75));
        CHECK_THROWS(rng.categorical(std::vector<double>{0.0, 0.0}));
    }

    TEST_CASE("shuffle is a seeded permutation") {
        std::vector<int> v(50);
        std::iota(v.begin(), v.end(), 0);
        auto w = v;
        CounterRng r1(9);
        CounterRng r2(9);
        shuffle(v, r1);
        shuffle(w, r2);
        CHECK(v == w);
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < 50; ++i) {
            CHECK(sorted[static_cast<std::size_t>(i)] == i);
        }
    }

    TEST_CASE("substream does not advance the parent") {
        CounterRng a(5);
        const auto before = a.counter();
        auto s = a.substream(11);
        CHECK(a.counter() == before);
        CHECK(s.key() == derive_key(a.key(), 11));
    }
}
