#include "helpers.hpp"

#include "mst/datagen.hpp"
#include "mst/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace mst;
using namespace testing;

namespace {

/// |observed - expected| within 3 sd for a sum of independent Bernoulli draws.
void check_bernoulli_sum(double observed, double expected, double variance) {
    CHECK(std::abs(observed - expected) <= 3.0 * std::sqrt(variance) + 1e-9);
}

} // namespace

TEST_SUITE("datagen") {
    TEST_CASE("context-free generator shape and determinism") {
        const auto a = gen_context_free(11, 3000);
        const auto b = gen_context_free(11, 3000);
        const auto c = gen_context_free(12, 3000);
        CHECK(a.data == b.data);
        CHECK(a.truth == b.truth);
        CHECK(!(a.data == c.data));
        REQUIRE(a.truth.mnl.size() == 1);
        for (double beta : a.truth.mnl[0].beta) {
            CHECK(beta > -1.0);
            CHECK(beta < 1.0);
        }
        std::vector<int> sizes(6, 0);
        for (std::size_t r = 0; r < a.data.size(); ++r) {
            const auto h = a.data.option_count(r);
            REQUIRE(h >= 2);
            REQUIRE(h <= 5);
            ++sizes[h];
            REQUIRE(a.data.choice(r) >= 0);
            REQUIRE(a.data.choice(r) <= static_cast<int>(h));
            for (double x : a.data.context(r)) {
                REQUIRE(x >= 0.0);
                REQUIRE(x < 1.0);
            }
        }
        for (int h = 2; h <= 5; ++h) {
            CHECK(std::abs(sizes[static_cast<std::size_t>(h)] - 750) < 3 * std::sqrt(3000 * 0.25 * 0.75));
        }
        // Prefix consistency: a shorter run is a prefix of a longer one.
        CHECK(gen_context_free(11, 100).data == a.data.slice(0, 100));
    }

    TEST_CASE("choice frequencies match the MNL oracle") {
        const auto g = gen_context_free(21, 200000);
        double obs0 = 0, exp0 = 0, var0 = 0, obs1 = 0, exp1 = 0, var1 = 0;
        std::vector<double> p;
        for (std::size_t r = 0; r < g.data.size(); ++r) {
            g.truth.true_probs(g.data, r, p);
            obs0 += g.data.choice(r) == 0;
            exp0 += p[0];
            var0 += p[0] * (1 - p[0]);
            obs1 += g.data.choice(r) == 1;
            exp1 += p[1];
            var1 += p[1] * (1 - p[1]);
        }
        check_bernoulli_sum(obs0, exp0, var0);
        check_bernoulli_sum(obs1, exp1, var1);
        // Context-free oracle ignores the context.
        g.truth.true_probs(g.data, 0, p);
        CHECK(mnl_predict(g.truth.mnl[0], g.data.options(0), g.data.option_ids(0)) == p);
    }

    TEST_CASE("CMT truths: balance, depth, leaf count distribution") {
        std::vector<int> counts(8, 0);
        const int runs = 10000;
        for (int s = 0; s < runs; ++s) {
            const auto g = gen_cmt_truth(static_cast<std::uint64_t>(s), 0);
            const auto& t = *g.truth.router;
            const auto leaves = t.leaf_count();
            REQUIRE(leaves >= 4);
            REQUIRE(leaves <= 7);
            REQUIRE(t.depth() <= 3);
            ++counts[leaves];
            for (const auto& [l, r] : split_balance(t)) {
                REQUIRE(l >= 0.3);
                REQUIRE(r >= 0.3);
            }
        }
        double chi2 = 0.0;
        for (int k = 4; k <= 7; ++k) {
            const double e = runs / 4.0;
            chi2 += (counts[static_cast<std::size_t>(k)] - e) * (counts[static_cast<std::size_t>(k)] - e) / e;
        }
        // 3 degrees of freedom: mean 3, sd sqrt(6).
        CHECK(chi2 <= 3.0 + 3.0 * std::sqrt(6.0));
    }

    TEST_CASE("CMT oracle is the routed leaf's MNL") {
        const auto g = gen_cmt_truth(5, 500);
        std::vector<double> p;
        for (std::size_t r = 0; r < g.data.size(); ++r) {
            g.truth.true_probs(g.data, r, p);
            const int leaf = g.truth.router->route(g.data.context(r));
            const auto& params = std::get<MnlParams>(g.truth.router->leaf_model(leaf).payload());
            REQUIRE(p == mnl_predict(params, g.data.options(r), g.data.option_ids(r)));
        }
    }

    TEST_CASE("kmeans truths: weights, sigma, cluster frequencies") {
        const auto g = gen_kmeans_truth(9, 100000);
        CHECK(g.truth.sigma == 0.08);
        const auto k = g.truth.mnl.size();
        CHECK(k >= 4);
        CHECK(k <= 7);
        const double total = std::accumulate(g.truth.mixture_weights.begin(), g.truth.mixture_weights.end(), 0.0);
        CHECK(std::abs(total - 1.0) <= 1e-12);
        std::vector<double> counts(k, 0.0);
        REQUIRE(g.data.has_latent());
        for (std::size_t r = 0; r < g.data.size(); ++r) {
            ++counts[static_cast<std::size_t>(g.data.latent(r))];
        }
        for (std::size_t c = 0; c < k; ++c) {
            const double pi = g.truth.mixture_weights[c];
            CHECK(pi > 0.0);
            check_bernoulli_sum(counts[c], 1e5 * pi, 1e5 * pi * (1 - pi));
        }
        // Posterior mixture is a proper distribution close to the latent one for well-separated rows.
        std::vector<double> p;
        g.truth.true_probs(g.data, 0, p, true);
        CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-12);
        CHECK(gen_kmeans_truth(9, 10, 0.2).truth.sigma == 0.2);
    }

    TEST_CASE("auction truths: monotone curves and win rates") {
        const auto g = gen_auctions(13, 100000, 8);
        REQUIRE(g.truth.curves.size() == 8);
        CHECK(g.truth.router->leaf_count() == 8);
        for (const auto& c : g.truth.curves) {
            double prev = -1.0;
            for (int i = 0; i < 1000; ++i) {
                const double bid = 0.1 * std::pow(100.0, i / 999.0);
                const double v = c(bid);
                REQUIRE(v >= prev);
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1.0);
                prev = v;
            }
        }
        for (const auto& [l, r] : split_balance(*g.truth.router)) {
            CHECK(l >= 0.3);
            CHECK(r >= 0.3);
        }
        std::vector<double> obs(8, 0), expct(8, 0), var(8, 0);
        std::vector<double> p;
        for (std::size_t r = 0; r < g.data.size(); ++r) {
            REQUIRE(g.data.bid(r) >= 0.1);
            REQUIRE(g.data.bid(r) <= 10.0);
            const auto s = static_cast<std::size_t>(g.truth.segment_of(g.data, r));
            g.truth.true_probs(g.data, r, p);
            obs[s] += g.data.win(r);
            expct[s] += p[0];
            var[s] += p[0] * (1 - p[0]);
        }
        for (std::size_t s = 0; s < 8; ++s) {
            check_bernoulli_sum(obs[s], expct[s], var[s]);
        }
        const auto one = gen_auctions(1, 10, 1);
        CHECK(one.truth.router->leaf_count() == 1);
    }

    TEST_CASE("variant mismatch is an error") {
        const auto a = gen_auctions(1, 5, 2);
        const auto c = gen_cmt_truth(1, 5);
        std::vector<double> p;
        CHECK_THROWS_AS(a.truth.true_probs(c.data, 0, p), Error);
        CHECK_THROWS_AS(c.truth.true_probs(a.data, 0, p), Error);
        CHECK(parse_truth_variant("kmeans") == TruthVariant::kmeans_mixture);
        CHECK_THROWS_AS(parse_truth_variant("lcmnl"), Error);
    }
}
