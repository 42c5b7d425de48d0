#include "helpers.hpp"

#include "mst/error.hpp"

#include <doctest.h>

using namespace mst;
using namespace testing;

TEST_SUITE("dataset") {
    TEST_CASE("schema rejects duplicate names and resolves categories") {
        CHECK_THROWS_AS(ContextSchema({{"a", VariableKind::numeric, {}}, {"a", VariableKind::numeric, {}}}), Error);
        auto s = fig1_schema();
        CHECK(s.index_of("gender") == 2u);
        CHECK(!s.index_of("zip").has_value());
        CHECK(s.category_code(1, "USA") == 1);
        CHECK(s.category_code(1, "Mars") == -1);
        CHECK(s.intern_category(1, "Mars") == 2);
        CHECK(s.category_code(1, "Mars") == 2);
    }

    TEST_CASE("choice rows validate payload") {
        Dataset d(numeric_schema(1), PayloadKind::choice, 2);
        const double x[] = {0.5};
        const double f[] = {1.0, 2.0, 3.0, 4.0};
        const int ids[] = {0, 1};
        d.add_choice(x, f, ids, 2);
        CHECK(d.size() == 1);
        CHECK(d.option_count(0) == 2);
        CHECK(d.choice(0) == 2);
        CHECK(d.option_slots() == 2);
        CHECK_THROWS_AS(d.add_choice(x, f, ids, 3), Error);
        const double bad[] = {std::nan("")};
        CHECK_THROWS_AS(d.add_choice(bad, f, ids, 0), Error);
    }

    TEST_CASE("auction rows validate payload") {
        Dataset d(numeric_schema(1), PayloadKind::auction);
        const double x[] = {0.0};
        d.add_auction(x, 1.5, 1);
        CHECK(d.bid(0) == 1.5);
        CHECK(d.win(0) == 1);
        CHECK_THROWS_AS(d.add_auction(x, -1.0, 0), Error);
        CHECK_THROWS_AS(d.add_auction(x, 1.0, 2), Error);
    }

    TEST_CASE("categorical codes must exist in the schema") {
        Dataset d(fig1_schema(), PayloadKind::auction);
        const double ok[] = {30.0, 1.0, 0.0};
        const double bad[] = {30.0, 5.0, 0.0};
        d.add_auction(ok, 1.0, 0);
        CHECK_THROWS_AS(d.add_auction(bad, 1.0, 0), Error);
    }

    TEST_CASE("slice, subset and append preserve rows") {
        const auto d = two_population_data(20, 1);
        const auto a = d.slice(0, 10);
        auto b = d.slice(10, 20);
        CHECK(a.size() == 10);
        auto joined = a;
        joined.append(b);
        CHECK(joined == d);
        const std::size_t rows[] = {3, 5};
        const auto s = d.subset(rows);
        CHECK(s.size() == 2);
        CHECK(s.choice(1) == d.choice(5));
        CHECK(s.row_id(1) == d.row_id(5));
    }
}
