#pragma once

#include "mst/dataset.hpp"
#include "mst/leaf_models.hpp"
#include "mst/rng.hpp"
#include "mst/tree.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace testing {

using namespace mst;

inline ContextSchema numeric_schema(std::size_t m) {
    std::vector<ContextVariable> vars;
    for (std::size_t j = 0; j < m; ++j) {
        vars.push_back({"x" + std::to_string(j), VariableKind::numeric, {}});
    }
    return ContextSchema(vars);
}

/// n single-option rows with feature [1]; the first `chosen` pick the option.
inline Dataset single_option_data(int n, int chosen) {
    Dataset d(numeric_schema(1), PayloadKind::choice, 1);
    for (int i = 0; i < n; ++i) {
        const double x[] = {0.0};
        const double f[] = {1.0};
        const int ids[] = {0};
        d.add_choice(x, f, ids, i < chosen ? 1 : 0);
    }
    return d;
}

/// Choice rows where binary context z in {0,1} selects beta = +2 or -2 (1-dim options).
inline Dataset two_population_data(std::size_t n, std::uint64_t seed) {
    Dataset d(numeric_schema(2), PayloadKind::choice, 1);
    CounterRng rng(seed, 99);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = static_cast<double>(i % 2);
        const double noise = rng.uniform();
        const double x[] = {noise, z};
        const double beta = z == 0.0 ? 2.0 : -2.0;
        std::vector<double> f(2);
        f[0] = rng.uniform();
        f[1] = rng.uniform();
        MnlParams p = MnlParams::zeros(1);
        p.beta[0] = beta;
        const int ids[] = {0, 1};
        const auto probs = mnl_predict(p, f, ids);
        const int y = static_cast<int>(rng.categorical(probs));
        d.add_choice(x, f, ids, y);
    }
    return d;
}

inline Dataset auction_data(const std::vector<double>& bids, const std::vector<int>& wins) {
    Dataset d(numeric_schema(1), PayloadKind::auction);
    for (std::size_t i = 0; i < bids.size(); ++i) {
        const double x[] = {static_cast<double>(i)};
        d.add_auction(x, bids[i], wins[i]);
    }
    return d;
}

/// Fig. 1 schema: age (numeric), location {USA, other}, gender {Female, Male}.
inline ContextSchema fig1_schema() {
    return ContextSchema({{"age", VariableKind::numeric, {}},
                          {"location", VariableKind::categorical, {"Other", "USA"}},
                          {"gender", VariableKind::categorical, {"Female", "Male"}}});
}

/// Five-segment tree shaped like Fig. 1: age <= 40 then location = USA then
/// gender = Female (segments 1, 2), non-USA (segment 3); age > 40 split on
/// gender = Male (segments 4, 5). Leaf models are constants 0.1 .. 0.5.
inline Tree fig1_tree() {
    auto leaf = [](double p) {
        TreeNode n;
        n.model = LeafModel(ConstantParams{p});
        return n;
    };
    std::vector<TreeNode> nodes(9);
    nodes[0].split = Split{0, VariableKind::numeric, 40.0};
    nodes[0].left = 1;
    nodes[0].right = 2;
    nodes[1].split = Split{1, VariableKind::categorical, 1.0}; // location = USA
    nodes[1].left = 3;
    nodes[1].right = 4;
    nodes[3].split = Split{2, VariableKind::categorical, 0.0}; // gender = Female
    nodes[3].left = 5;
    nodes[3].right = 6;
    nodes[2].split = Split{2, VariableKind::categorical, 1.0}; // gender = Male
    nodes[2].left = 7;
    nodes[2].right = 8;
    nodes[5] = leaf(0.1);
    nodes[6] = leaf(0.2);
    nodes[4] = leaf(0.3);
    nodes[7] = leaf(0.4);
    nodes[8] = leaf(0.5);
    for (int i : {0, 1, 2, 3}) {
        nodes[static_cast<std::size_t>(i)].model = LeafModel(ConstantParams{0.25});
    }
    return Tree(fig1_schema(), LeafFamily::constant, nodes);
}

} // namespace testing
