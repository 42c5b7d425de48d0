#include "mst/datagen.hpp"

#include "mst/error.hpp"
#include "mst/rng.hpp"
#include "mst/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace mst {

using nlohmann::json;

std::string_view to_string(TruthVariant v) {
    switch (v) {
    case TruthVariant::context_free:
        return "context-free";
    case TruthVariant::cmt:
        return "cmt";
    case TruthVariant::kmeans_mixture:
        return "kmeans";
    case TruthVariant::segmented_auction:
        return "auction";
    }
    return "context-free";
}

TruthVariant parse_truth_variant(std::string_view name) {
    for (auto v : {TruthVariant::context_free, TruthVariant::cmt, TruthVariant::kmeans_mixture,
                   TruthVariant::segmented_auction}) {
        if (to_string(v) == name) {
            return v;
        }
    }
    if (name == "kmeans-mixture") {
        return TruthVariant::kmeans_mixture;
    }
    if (name == "segmented-auction") {
        return TruthVariant::segmented_auction;
    }
    throw Error("unknown ground truth '" + std::string(name) + "'");
}

double WinCurve::operator()(double bid) const {
    const double lb = std::log(std::max(bid, 1e-300));
    const double sig = 1.0 / (1.0 + std::exp(-(lb - center) / scale));
    const double ramp = std::clamp((lb - ramp_start) / (ramp_end - ramp_start), 0.0, 1.0);
    const double v = floor + (ceiling - floor) * (sigmoid_weight * sig + (1.0 - sigmoid_weight) * ramp);
    return std::clamp(v, 0.0, 1.0);
}

// ---------------------------------------------------------------- truth evaluation

std::size_t GroundTruth::segment_count() const {
    switch (variant) {
    case TruthVariant::context_free:
        return 1;
    case TruthVariant::kmeans_mixture:
        return mnl.size();
    default:
        return router ? router->leaf_count() : 0;
    }
}

int GroundTruth::segment_of(const Dataset& data, std::size_t row) const {
    switch (variant) {
    case TruthVariant::context_free:
        return 0;
    case TruthVariant::kmeans_mixture: {
        if (data.has_latent() && data.latent(row) >= 0) {
            return data.latent(row);
        }
        // Most probable cluster given the context.
        const auto x = data.context(row);
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < mnl.size(); ++k) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double d = x[j] - cluster_means[k][j];
                d2 += d * d;
            }
            const double score = std::log(mixture_weights[k]) - d2 / (2.0 * sigma * sigma);
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(k);
            }
        }
        return best;
    }
    default:
        return router->route(data.context(row));
    }
}

void GroundTruth::true_probs(const Dataset& data, std::size_t row, std::vector<double>& out,
                             bool posterior_mixture) const {
    switch (variant) {
    case TruthVariant::context_free:
        if (data.kind() != PayloadKind::choice) {
            throw Error("context-free truth needs choice rows");
        }
        mnl_predict_into(mnl.at(0), data.options(row), data.option_ids(row), out);
        return;
    case TruthVariant::cmt:
        if (data.kind() != PayloadKind::choice) {
            throw Error("cmt truth needs choice rows");
        }
        router->predict(data, row, out);
        return;
    case TruthVariant::kmeans_mixture: {
        if (data.kind() != PayloadKind::choice) {
            throw Error("kmeans truth needs choice rows");
        }
        if (!posterior_mixture && data.has_latent() && data.latent(row) >= 0) {
            mnl_predict_into(mnl.at(static_cast<std::size_t>(data.latent(row))), data.options(row),
                             data.option_ids(row), out);
            return;
        }
        const auto x = data.context(row);
        std::vector<double> logw(mnl.size());
        for (std::size_t k = 0; k < mnl.size(); ++k) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                const double d = x[j] - cluster_means[k][j];
                d2 += d * d;
            }
            logw[k] = std::log(mixture_weights[k]) - d2 / (2.0 * sigma * sigma);
        }
        const double top = *std::max_element(logw.begin(), logw.end());
        double z = 0.0;
        for (double& w : logw) {
            w = std::exp(w - top);
            z += w;
        }
        std::vector<double> probs;
        out.assign(data.option_count(row) + 1, 0.0);
        for (std::size_t k = 0; k < mnl.size(); ++k) {
            mnl_predict_into(mnl[k], data.options(row), data.option_ids(row), probs);
            for (std::size_t h = 0; h < out.size(); ++h) {
                out[h] += logw[k] / z * probs[h];
            }
        }
        return;
    }
    case TruthVariant::segmented_auction:
        if (data.kind() != PayloadKind::auction) {
            throw Error("auction truth needs auction rows");
        }
        out.assign(1, curves.at(static_cast<std::size_t>(router->route(data.context(row))))(data.bid(row)));
        return;
    }
}

// ---------------------------------------------------------------- random segmentation trees

namespace {

constexpr double kBalance = 0.3;

struct Region {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<std::vector<int>> categories;
};

Region full_region(const ContextSchema& schema) {
    Region r;
    for (const auto& v : schema.variables()) {
        r.lo.push_back(0.0);
        r.hi.push_back(1.0);
        std::vector<int> codes(v.categories.size());
        std::iota(codes.begin(), codes.end(), 0);
        r.categories.push_back(std::move(codes));
    }
    return r;
}

/// Left-child mass fraction of `split` inside `region`.
double left_fraction(const Region& region, const Split& split) {
    if (split.kind == VariableKind::numeric) {
        const double lo = region.lo[split.variable];
        const double hi = region.hi[split.variable];
        return std::clamp((split.value - lo) / (hi - lo), 0.0, 1.0);
    }
    const auto& cats = region.categories[split.variable];
    const bool present = std::find(cats.begin(), cats.end(), static_cast<int>(split.value)) != cats.end();
    return present ? 1.0 / static_cast<double>(cats.size()) : 0.0;
}

std::pair<Region, Region> divide(const Region& region, const Split& split) {
    Region left = region;
    Region right = region;
    if (split.kind == VariableKind::numeric) {
        left.hi[split.variable] = split.value;
        right.lo[split.variable] = split.value;
    } else {
        const int code = static_cast<int>(split.value);
        left.categories[split.variable] = {code};
        auto& rc = right.categories[split.variable];
        rc.erase(std::remove(rc.begin(), rc.end(), code), rc.end());
    }
    return {std::move(left), std::move(right)};
}

/// Random tree with `leaves` leaves and depth <= max_depth. Split variables and
/// points are uniform; a draw is rejected and redrawn until both children get
/// at least 30% of the parent region's mass.
std::vector<TreeNode> random_balanced_tree(const ContextSchema& schema, std::size_t leaves, int max_depth,
                                           CounterRng& rng) {
    std::vector<TreeNode> nodes(1);
    std::vector<Region> regions{full_region(schema)};
    std::vector<int> depth{0};
    std::size_t leaf_total = 1;
    while (leaf_total < leaves) {
        std::vector<std::size_t> open;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].is_leaf() && depth[i] < max_depth) {
                open.push_back(i);
            }
        }
        if (open.empty()) {
            throw Error("cannot reach the requested leaf count within the depth limit");
        }
        const std::size_t target =
            open[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(open.size()) - 1))];
        Split split;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 100000) {
                throw Error("balanced split rejection sampling did not terminate");
            }
            split.variable =
                static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(schema.size()) - 1));
            split.kind = schema[split.variable].kind;
            const auto& region = regions[target];
            if (split.kind == VariableKind::numeric) {
                split.value = rng.uniform(region.lo[split.variable], region.hi[split.variable]);
            } else {
                const auto& cats = region.categories[split.variable];
                if (cats.size() < 2) {
                    continue;
                }
                split.value = cats[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(cats.size()) - 1))];
            }
            const double f = left_fraction(region, split);
            if (f >= kBalance && 1.0 - f >= kBalance) {
                break;
            }
        }
        auto [lr, rr] = divide(regions[target], split);
        const int left = static_cast<int>(nodes.size());
        nodes[target].split = split;
        nodes[target].left = left;
        nodes[target].right = left + 1;
        nodes.emplace_back();
        nodes.emplace_back();
        const int d = depth[target] + 1;
        regions.push_back(std::move(lr));
        regions.push_back(std::move(rr));
        depth.push_back(d);
        depth.push_back(d);
        ++leaf_total;
    }
    return nodes;
}

MnlParams random_mnl(std::size_t option_dim, CounterRng& rng) {
    MnlParams p = MnlParams::zeros(option_dim);
    for (double& b : p.beta) {
        b = rng.uniform(-1.0, 1.0);
    }
    return p;
}

ContextSchema numeric_schema(std::size_t m) {
    std::vector<ContextVariable> vars;
    for (std::size_t j = 0; j < m; ++j) {
        vars.push_back({"x" + std::to_string(j), VariableKind::numeric, {}});
    }
    return ContextSchema(std::move(vars));
}

Dataset empty_choice_dataset(const ChoiceShape& shape) {
    return Dataset(numeric_schema(shape.contexts), PayloadKind::choice, shape.option_dim);
}

/// Draws an assortment (size uniform on [min_options, max_options], features
/// Uniform(0,1)) and a choice from `params`, appending the row.
void append_choice_row(Dataset& data, const ChoiceShape& shape, const MnlParams& params, CounterRng& rs,
                       std::span<const double> context, int latent) {
    const auto h = static_cast<std::size_t>(rs.uniform_int(shape.min_options, shape.max_options));
    std::vector<double> feats(h * shape.option_dim);
    for (double& f : feats) {
        f = rs.uniform();
    }
    std::vector<int> ids(h);
    std::iota(ids.begin(), ids.end(), 0);
    const auto probs = mnl_predict(params, feats, ids);
    const auto y = static_cast<int>(rs.categorical(probs));
    data.add_choice(context, feats, ids, y, {}, latent);
}

CounterRng row_stream(std::uint64_t seed, std::size_t row) {
    return CounterRng(seed, static_cast<std::uint64_t>(row) + 1);
}

void check_shape(const ChoiceShape& shape) {
    if (shape.contexts == 0 || shape.option_dim == 0 || shape.min_options < 1 ||
        shape.max_options < shape.min_options) {
        throw Error("invalid choice generator shape");
    }
}

} // namespace

std::vector<std::pair<double, double>> split_balance(const Tree& tree) {
    std::vector<std::pair<double, double>> out;
    std::function<void(int, const Region&)> walk = [&](int id, const Region& region) {
        const auto& n = tree.node(static_cast<std::size_t>(id));
        if (n.is_leaf()) {
            return;
        }
        const double f = left_fraction(region, *n.split);
        out.emplace_back(f, 1.0 - f);
        auto [l, r] = divide(region, *n.split);
        walk(n.left, l);
        walk(n.right, r);
    };
    walk(0, full_region(tree.schema()));
    return out;
}

// ---------------------------------------------------------------- generators

Generated gen_context_free(std::uint64_t seed, std::size_t n, const ChoiceShape& shape) {
    check_shape(shape);
    Generated g{empty_choice_dataset(shape), {}};
    CounterRng truth_rng(seed, 0);
    g.truth.variant = TruthVariant::context_free;
    g.truth.mnl.push_back(random_mnl(shape.option_dim, truth_rng));
    std::vector<double> x(shape.contexts);
    for (std::size_t r = 0; r < n; ++r) {
        auto rs = row_stream(seed, r);
        for (double& v : x) {
            v = rs.uniform();
        }
        append_choice_row(g.data, shape, g.truth.mnl[0], rs, x, -1);
    }
    return g;
}

Generated gen_cmt_truth(std::uint64_t seed, std::size_t n, const ChoiceShape& shape) {
    check_shape(shape);
    Generated g{empty_choice_dataset(shape), {}};
    CounterRng truth_rng(seed, 0);
    const auto leaves = static_cast<std::size_t>(truth_rng.uniform_int(4, 7));
    auto nodes = random_balanced_tree(g.data.schema(), leaves, 3, truth_rng);
    Tree shape_only(g.data.schema(), LeafFamily::mnl, nodes);
    // Leaf parameters in leaf-id order.
    for (std::size_t l = 0; l < shape_only.leaf_count(); ++l) {
        nodes[static_cast<std::size_t>(shape_only.leaf_node(static_cast<int>(l)))].model =
            LeafModel(random_mnl(shape.option_dim, truth_rng));
    }
    g.truth.variant = TruthVariant::cmt;
    g.truth.router = Tree(g.data.schema(), LeafFamily::mnl, std::move(nodes));

    std::vector<double> x(shape.contexts);
    for (std::size_t r = 0; r < n; ++r) {
        auto rs = row_stream(seed, r);
        for (double& v : x) {
            v = rs.uniform();
        }
        const int leaf = g.truth.router->route(x);
        const auto& params = std::get<MnlParams>(g.truth.router->leaf_model(leaf).payload());
        append_choice_row(g.data, shape, params, rs, x, -1);
    }
    return g;
}

Generated gen_kmeans_truth(std::uint64_t seed, std::size_t n, double sigma, const ChoiceShape& shape) {
    check_shape(shape);
    if (!(sigma > 0.0)) {
        throw Error("sigma must be positive");
    }
    Generated g{empty_choice_dataset(shape), {}};
    CounterRng truth_rng(seed, 0);
    auto& t = g.truth;
    t.variant = TruthVariant::kmeans_mixture;
    t.sigma = sigma;
    const auto k = static_cast<std::size_t>(truth_rng.uniform_int(4, 7));
    for (std::size_t c = 0; c < k; ++c) {
        t.mnl.push_back(random_mnl(shape.option_dim, truth_rng));
        std::vector<double> mean(shape.contexts);
        for (double& v : mean) {
            v = truth_rng.uniform();
        }
        t.cluster_means.push_back(std::move(mean));
    }
    std::vector<double> u(k);
    for (double& v : u) {
        v = truth_rng.uniform(-1.0, 1.0);
    }
    double z = 0.0;
    for (double v : u) {
        z += std::exp(v);
    }
    for (double v : u) {
        t.mixture_weights.push_back(std::exp(v) / z);
    }

    std::vector<double> x(shape.contexts);
    for (std::size_t r = 0; r < n; ++r) {
        auto rs = row_stream(seed, r);
        const auto c = rs.categorical(t.mixture_weights);
        for (std::size_t j = 0; j < x.size(); ++j) {
            x[j] = t.cluster_means[c][j] + sigma * rs.normal();
        }
        append_choice_row(g.data, shape, t.mnl[c], rs, x, static_cast<int>(c));
    }
    return g;
}

Generated gen_auctions(std::uint64_t seed, std::size_t n, std::size_t segments, const AuctionShape& shape) {
    if (segments < 1) {
        throw Error("gen_auctions needs at least one segment");
    }
    if (!(shape.bid_min > 0.0 && shape.bid_max > shape.bid_min)) {
        throw Error("bid range must satisfy 0 < bid_min < bid_max");
    }
    ContextSchema schema({{"x0", VariableKind::numeric, {}},
                          {"x1", VariableKind::numeric, {}},
                          {"x2", VariableKind::numeric, {}},
                          {"c0", VariableKind::categorical, {"a", "b", "c", "d"}},
                          {"c1", VariableKind::categorical, {"u", "v", "w"}}});
    Generated g{Dataset(schema, PayloadKind::auction), {}};
    CounterRng truth_rng(seed, 0);
    auto& t = g.truth;
    t.variant = TruthVariant::segmented_auction;
    t.router = Tree(schema, LeafFamily::isotonic, random_balanced_tree(schema, segments, 64, truth_rng));

    const double lo = std::log(shape.bid_min);
    const double hi = std::log(shape.bid_max);
    const double range = hi - lo;
    for (std::size_t s = 0; s < segments; ++s) {
        WinCurve c;
        c.sigmoid_weight = truth_rng.uniform(0.3, 1.0);
        c.center = truth_rng.uniform(lo + 0.15 * range, hi - 0.15 * range);
        c.scale = truth_rng.uniform(0.05, 0.2) * range;
        c.ramp_start = truth_rng.uniform(lo, lo + 0.6 * range);
        c.ramp_end = c.ramp_start + truth_rng.uniform(0.2, 0.4) * range;
        c.floor = truth_rng.uniform(0.0, 0.1);
        c.ceiling = truth_rng.uniform(0.7, 1.0);
        t.curves.push_back(c);
    }

    std::vector<double> x(schema.size());
    for (std::size_t r = 0; r < n; ++r) {
        auto rs = row_stream(seed, r);
        for (std::size_t j = 0; j < schema.size(); ++j) {
            x[j] = schema[j].kind == VariableKind::numeric
                       ? rs.uniform()
                       : static_cast<double>(
                             rs.uniform_int(0, static_cast<std::int64_t>(schema[j].categories.size()) - 1));
        }
        const double bid = std::exp(rs.uniform(lo, hi));
        const int segment = t.router->route(x);
        const int win = rs.uniform() < t.curves[static_cast<std::size_t>(segment)](bid) ? 1 : 0;
        g.data.add_auction(x, bid, win, {}, -1);
    }
    return g;
}

// ---------------------------------------------------------------- documents

std::string truth_to_document(const GroundTruth& truth) {
    json t = {{"variant", to_string(truth.variant)}, {"sigma", truth.sigma}};
    json models = json::array();
    for (const auto& m : truth.mnl) {
        models.push_back(model_to_json(LeafModel(m)));
    }
    t["mnl"] = std::move(models);
    t["router"] = truth.router ? tree_to_json(*truth.router) : json(nullptr);
    t["mixture_weights"] = truth.mixture_weights;
    t["cluster_means"] = truth.cluster_means;
    json curves = json::array();
    for (const auto& c : truth.curves) {
        curves.push_back({{"sigmoid_weight", c.sigmoid_weight},
                          {"center", c.center},
                          {"scale", c.scale},
                          {"ramp_start", c.ramp_start},
                          {"ramp_end", c.ramp_end},
                          {"floor", c.floor},
                          {"ceiling", c.ceiling}});
    }
    t["curves"] = std::move(curves);
    json doc = {{"format", kTreeFormat}, {"truth", std::move(t)}};
    return doc.dump(1) + "\n";
}

GroundTruth truth_from_document(std::string_view document) {
    const json doc = parse_document(document, kTreeFormat);
    try {
        const auto& t = doc.at("truth");
        GroundTruth g;
        g.variant = parse_truth_variant(t.at("variant").get<std::string>());
        g.sigma = t.at("sigma").get<double>();
        for (const auto& jm : t.at("mnl")) {
            g.mnl.push_back(std::get<MnlParams>(model_from_json(jm).payload()));
        }
        if (!t.at("router").is_null()) {
            g.router = tree_from_json(t.at("router"));
        }
        g.mixture_weights = t.at("mixture_weights").get<std::vector<double>>();
        g.cluster_means = t.at("cluster_means").get<std::vector<std::vector<double>>>();
        for (const auto& jc : t.at("curves")) {
            WinCurve c;
            c.sigmoid_weight = jc.at("sigmoid_weight").get<double>();
            c.center = jc.at("center").get<double>();
            c.scale = jc.at("scale").get<double>();
            c.ramp_start = jc.at("ramp_start").get<double>();
            c.ramp_end = jc.at("ramp_end").get<double>();
            c.floor = jc.at("floor").get<double>();
            c.ceiling = jc.at("ceiling").get<double>();
            g.curves.push_back(c);
        }
        const bool needs_router = g.variant == TruthVariant::cmt || g.variant == TruthVariant::segmented_auction;
        if (needs_router != g.router.has_value()) {
            throw DecodeError("truth router presence does not match the variant");
        }
        if (g.variant == TruthVariant::segmented_auction && g.curves.size() != g.router->leaf_count()) {
            throw DecodeError("auction truth needs one curve per segment");
        }
        if (g.variant == TruthVariant::kmeans_mixture &&
            (g.mixture_weights.size() != g.mnl.size() || g.cluster_means.size() != g.mnl.size())) {
            throw DecodeError("kmeans truth has inconsistent cluster blocks");
        }
        return g;
    } catch (const json::exception& e) {
        throw DecodeError(std::string("malformed truth document: ") + e.what());
    } catch (const std::bad_variant_access&) {
        throw DecodeError("truth MNL block holds a non-MNL model");
    }
}

} // namespace mst
