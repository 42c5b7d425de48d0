#include "mst/config.hpp"
#include "mst/error.hpp"

#include <algorithm>

#include <doctest.h>

using namespace mst;

TEST_SUITE("config") {
    TEST_CASE("parses key = value lines with comments") {
        const auto m = parse_config("# header\nmax-depth = 3\n  --q-split=4 # inline\n\nleaf-family = isotonic\n");
        CHECK(m.size() == 3);
        CHECK(m.at("max-depth") == "3");
        CHECK(m.at("q-split") == "4");
        CHECK(m.at("leaf-family") == "isotonic");
    }

    TEST_CASE("rejects malformed and duplicate lines") {
        CHECK_THROWS_AS(parse_config("max-depth 3\n"), Error);
        CHECK_THROWS_AS(parse_config("a = 1\na = 2\n"), Error);
        CHECK_THROWS_AS(parse_config(" = 2\n"), Error);
    }

    TEST_CASE("applies training keys") {
        TrainConfig c;
        CHECK(apply_train_key(c, "max-depth", "5"));
        CHECK(c.max_depth == 5);
        CHECK(apply_train_key(c, "max-depth", "none"));
        CHECK_FALSE(c.max_depth.has_value());
        CHECK(apply_train_key(c, "leaf-family", "logistic"));
        CHECK(c.family == LeafFamily::logistic);
        CHECK(apply_train_key(c, "warm-starts", "false"));
        CHECK_FALSE(c.warm_starts);
        CHECK(apply_train_key(c, "l2-ridge", "0.5"));
        CHECK(c.fit_config.l2_ridge == 0.5);
        CHECK(apply_train_key(c, "workers", "3"));
        CHECK(c.worker_count == 3);
        CHECK_FALSE(apply_train_key(c, "metric", "mae"));
        CHECK_THROWS_AS(apply_train_key(c, "min-leaf", "lots"), Error);
        CHECK_THROWS_AS(apply_train_key(c, "warm-starts", "maybe"), Error);
        CHECK_THROWS_AS(apply_train_key(c, "q-split", "4.5"), Error);
    }

    TEST_CASE("field names map to flag keys") {
        CHECK(canonical_key("min_leaf_size") == "min-leaf");
        CHECK(canonical_key("fit_config.l2_ridge") == "l2-ridge");
        CHECK(canonical_key("max-depth") == "max-depth");
        CHECK(canonical_key("out") == "out");
        TrainConfig c;
        for (const auto& k : train_keys()) {
            CHECK(std::find(train_keys().begin(), train_keys().end(), canonical_key(k)) != train_keys().end());
        }
        CHECK(apply_train_key(c, canonical_key("q_split"), "8"));
        CHECK(c.q_split == 8);
    }
}
