#include "helpers.hpp"

#include "mst/benchmarks.hpp"
#include "mst/datagen.hpp"
#include "mst/error.hpp"
#include "mst/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace mst;
using namespace testing;

TEST_SUITE("benchmarks") {
    TEST_CASE("k-means recovers well separated blobs") {
        CounterRng rng(1);
        std::vector<double> pts;
        std::vector<int> truth;
        for (int i = 0; i < 400; ++i) {
            const int blob = i % 2;
            pts.push_back(blob * 10.0 + rng.normal());
            pts.push_back(rng.normal());
            truth.push_back(blob);
        }
        const auto r = kmeans(pts, 2, 2, 7);
        // Agreement up to label permutation.
        int same = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            same += r.assignments[i] == truth[i];
        }
        CHECK((same == 400 || same == 0));
        for (std::size_t t = 1; t < r.inertia_trace.size(); ++t) {
            CHECK(r.inertia_trace[t] <= r.inertia_trace[t - 1] + 1e-9);
        }
    }

    TEST_CASE("k-means edge cases") {
        const std::vector<double> pts = {0, 0, 2, 0, 4, 6};
        const auto one = kmeans(pts, 2, 1, 3);
        CHECK(one.centroids[0] == doctest::Approx(2.0));
        CHECK(one.centroids[1] == doctest::Approx(2.0));
        const auto all = kmeans(pts, 2, 3, 3);
        CHECK(all.inertia == 0.0);
        CHECK_THROWS_AS(kmeans(pts, 2, 4, 3), Error);
        const std::vector<double> dup = {1, 1, 1, 1, 2, 2};
        CHECK_THROWS_AS(kmeans(dup, 2, 3, 3), Error);
        CHECK(kmeans(dup, 2, 2, 3).inertia == 0.0);
    }

    TEST_CASE("subsampled k-means assigns every point") {
        CounterRng rng(2);
        std::vector<double> pts;
        for (int i = 0; i < 3000; ++i) {
            pts.push_back((i % 3) * 20.0 + rng.normal());
        }
        KMeansConfig cfg;
        cfg.sample_limit = 300;
        const auto r = kmeans(pts, 1, 3, 5, cfg);
        CHECK(r.assignments.size() == 3000);
        for (int i = 3; i < 3000; ++i) {
            CHECK(r.assignments[static_cast<std::size_t>(i)] == r.assignments[static_cast<std::size_t>(i % 3)]);
        }
    }

    TEST_CASE("encoder standardizes numerics and one-hot encodes categories") {
        Dataset d(fig1_schema(), PayloadKind::auction);
        const double a[] = {20.0, 1.0, 0.0};
        const double b[] = {40.0, 0.0, 1.0};
        d.add_auction(a, 1.0, 0);
        d.add_auction(b, 1.0, 1);
        const auto enc = ContextEncoder::fit(d);
        CHECK(enc.dim() == 5);
        std::vector<double> z(5);
        enc.encode(d.context(0), z);
        CHECK(z == std::vector<double>{-1.0, 0.0, 1.0, 1.0, 0.0});
    }

    TEST_CASE("K = 1 equals the context-free model") {
        const auto g = gen_context_free(4, 2000);
        const auto m = fit_clustered(g.data, 1, LeafFamily::mnl, FitConfig{}, 1);
        const auto direct = fit_leaf(LeafFamily::mnl, g.data, g.data.all_rows(), FitConfig{});
        std::vector<double> a, b;
        for (std::size_t r = 0; r < 50; ++r) {
            m.predict(g.data, r, a);
            direct.model.predict(g.data, r, b);
            CHECK(a == b);
        }
    }

    TEST_CASE("clustered prediction uses the nearest centroid") {
        const auto g = gen_kmeans_truth(6, 3000);
        const auto m = fit_clustered(g.data, 3, LeafFamily::mnl, FitConfig{}, 2);
        std::vector<double> z(m.encoder().dim());
        for (std::size_t r = 0; r < 100; ++r) {
            m.encoder().encode(g.data.context(r), z);
            CHECK(m.cluster_of(g.data.context(r)) == nearest_centroid(z, m.centroids(), z.size()));
        }
    }

    TEST_CASE("MNLKM with the true K improves with more data") {
        const auto small = gen_kmeans_truth(7, 4000);
        const auto large = gen_kmeans_truth(7, 40000);
        const auto k = small.truth.mnl.size();
        const auto test = gen_kmeans_truth(7, 45000).data.slice(40000, 45000);
        const auto ms = fit_clustered(small.data, k, LeafFamily::mnl, FitConfig{}, 3);
        const auto ml = fit_clustered(large.data, k, LeafFamily::mnl, FitConfig{}, 3);
        const double mae_s = mae_vs_truth(ms, small.truth, test);
        const double mae_l = mae_vs_truth(ml, large.truth, test);
        CHECK(mae_l < mae_s);
        CHECK(mae_l < 0.02);
    }

    TEST_CASE("tune_k picks K = 1 on context-free data and never loses to K = 1") {
        const auto g = gen_context_free(8, 6000);
        const auto train = g.data.slice(0, 3000);
        const auto val = g.data.slice(3000, 6000);
        KMeansConfig kc;
        kc.restarts = 3;
        const auto r = tune_k(train, val, 4, LeafFamily::mnl, FitConfig{}, 1, kc);
        CHECK(r.validation_loss.size() == 4);
        CHECK(r.selected_k == 1);
        CHECK(r.validation_loss[r.selected_k - 1] <= r.validation_loss[0]);
        const auto only = tune_k(train, val, 1, LeafFamily::mnl, FitConfig{}, 1, kc);
        CHECK(only.model.k() == 1);
        CHECK_THROWS_AS(tune_k(train, val, 0, LeafFamily::mnl, FitConfig{}, 1, kc), Error);
    }

    TEST_CASE("shared clustering across families") {
        const auto g = gen_auctions(3, 6000, 4);
        const auto train = g.data.slice(0, 3000);
        const auto val = g.data.slice(3000, 6000);
        const LeafFamily fams[] = {LeafFamily::isotonic, LeafFamily::logistic};
        KMeansConfig kc;
        kc.restarts = 2;
        const auto rs = tune_k_multi(train, val, 3, fams, FitConfig{}, 5, kc);
        REQUIRE(rs.size() == 2);
        CHECK(rs[0].model.family() == LeafFamily::isotonic);
        CHECK(rs[1].model.family() == LeafFamily::logistic);
        if (rs[0].selected_k == rs[1].selected_k) {
            CHECK(rs[0].model.centroids() == rs[1].model.centroids());
        }
    }

    TEST_CASE("mstkm-v1 round trip") {
        const auto g = gen_auctions(3, 2000, 3);
        const auto m = fit_clustered(g.data, 3, LeafFamily::isotonic, FitConfig{}, 9);
        const auto doc = serialize_clustered(m);
        CHECK(doc.find("mstkm-v1") != std::string::npos);
        CHECK(deserialize_clustered(doc) == m);
        CHECK_THROWS_AS(deserialize_clustered(doc.substr(0, 40)), DecodeError);
    }
}
