#include "mst/serialization.hpp"

#include "mst/error.hpp"

namespace mst {

using nlohmann::json;

namespace {

std::string_view kind_name(VariableKind k) {
    return k == VariableKind::numeric ? "numeric" : "categorical";
}

VariableKind parse_kind(const std::string& s) {
    if (s == "numeric") {
        return VariableKind::numeric;
    }
    if (s == "categorical") {
        return VariableKind::categorical;
    }
    throw DecodeError("unknown variable kind '" + s + "'");
}

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const DecodeError&) {
        throw;
    } catch (const json::exception& e) {
        throw DecodeError(std::string("malformed document: ") + e.what());
    } catch (const Error& e) {
        throw DecodeError(std::string("invalid document: ") + e.what());
    }
}

} // namespace

json schema_to_json(const ContextSchema& schema) {
    json out = json::array();
    for (const auto& v : schema.variables()) {
        json jv = {{"name", v.name}, {"kind", kind_name(v.kind)}};
        if (v.kind == VariableKind::categorical) {
            jv["categories"] = v.categories;
        }
        out.push_back(std::move(jv));
    }
    return {{"variables", std::move(out)}};
}

ContextSchema schema_from_json(const json& j) {
    std::vector<ContextVariable> vars;
    for (const auto& jv : j.at("variables")) {
        ContextVariable v;
        v.name = jv.at("name").get<std::string>();
        v.kind = parse_kind(jv.at("kind").get<std::string>());
        if (v.kind == VariableKind::categorical) {
            v.categories = jv.at("categories").get<std::vector<std::string>>();
        }
        vars.push_back(std::move(v));
    }
    return ContextSchema(std::move(vars));
}

json model_to_json(const LeafModel& model) {
    json out = {{"family", to_string(model.family())}};
    const auto& p = model.payload();
    if (const auto* mnl = std::get_if<MnlParams>(&p)) {
        out["option_dim"] = mnl->option_dim;
        out["slots"] = mnl->slots;
        out["beta"] = mnl->beta;
    } else if (const auto* iso = std::get_if<IsotonicCurve>(&p)) {
        out["breakpoints"] = iso->breakpoints;
        out["levels"] = iso->levels;
    } else if (const auto* lr = std::get_if<LogisticParams>(&p)) {
        out["slope"] = lr->slope;
        out["intercept"] = lr->intercept;
    } else {
        out["probability"] = std::get<ConstantParams>(p).probability;
    }
    return out;
}

LeafModel model_from_json(const json& j) {
    const auto family = parse_leaf_family(j.at("family").get<std::string>());
    switch (family) {
    case LeafFamily::mnl:
    case LeafFamily::mnl_option_specific: {
        MnlParams p;
        p.option_specific = family == LeafFamily::mnl_option_specific;
        p.option_dim = j.at("option_dim").get<std::size_t>();
        p.slots = j.at("slots").get<std::size_t>();
        p.beta = j.at("beta").get<std::vector<double>>();
        if (p.option_dim == 0 || p.beta.size() != p.slots * p.option_dim || (!p.option_specific && p.slots != 1)) {
            throw DecodeError("MNL parameter block has inconsistent dimensions");
        }
        return LeafModel(std::move(p));
    }
    case LeafFamily::isotonic: {
        IsotonicCurve c;
        c.breakpoints = j.at("breakpoints").get<std::vector<double>>();
        c.levels = j.at("levels").get<std::vector<double>>();
        if (c.levels.empty() || c.levels.size() != c.breakpoints.size()) {
            throw DecodeError("isotonic curve has inconsistent lengths");
        }
        for (std::size_t i = 1; i < c.levels.size(); ++i) {
            if (!(c.breakpoints[i] > c.breakpoints[i - 1]) || c.levels[i] < c.levels[i - 1]) {
                throw DecodeError("isotonic curve is not increasing");
            }
        }
        return LeafModel(std::move(c));
    }
    case LeafFamily::logistic:
        return LeafModel(LogisticParams{j.at("slope").get<double>(), j.at("intercept").get<double>()});
    case LeafFamily::constant:
        return LeafModel(ConstantParams{j.at("probability").get<double>()});
    }
    throw DecodeError("unsupported leaf family");
}

json tree_to_json(const Tree& tree) {
    json nodes = json::array();
    for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
        const auto& n = tree.node(i);
        json jn = {{"id", i}, {"train_loss", n.train_loss}, {"train_rows", n.train_rows}};
        if (n.split) {
            const auto& s = *n.split;
            json js = {{"variable", s.variable}, {"kind", kind_name(s.kind)}};
            if (s.kind == VariableKind::numeric) {
                js["threshold"] = s.value;
            } else {
                js["code"] = static_cast<long long>(s.value);
                js["category"] = tree.schema()[s.variable].categories.at(static_cast<std::size_t>(s.value));
            }
            jn["split"] = std::move(js);
            jn["left"] = n.left;
            jn["right"] = n.right;
        } else {
            jn["leaf_id"] = n.leaf_id;
        }
        jn["model"] = n.model ? model_to_json(*n.model) : json(nullptr);
        nodes.push_back(std::move(jn));
    }
    return {{"format", kTreeFormat},
            {"family", to_string(tree.family())},
            {"schema", schema_to_json(tree.schema())},
            {"depth", tree.depth()},
            {"leaf_count", tree.leaf_count()},
            {"nodes", std::move(nodes)}};
}

Tree tree_from_json(const json& j) {
    return guarded([&] {
        const auto family = parse_leaf_family(j.at("family").get<std::string>());
        auto schema = schema_from_json(j.at("schema"));
        std::vector<TreeNode> nodes;
        const auto& jnodes = j.at("nodes");
        for (std::size_t i = 0; i < jnodes.size(); ++i) {
            const auto& jn = jnodes[i];
            if (jn.at("id").get<std::size_t>() != i) {
                throw DecodeError("node ids must be 0..N-1 in order");
            }
            TreeNode n;
            n.train_loss = jn.at("train_loss").get<double>();
            n.train_rows = jn.at("train_rows").get<std::size_t>();
            if (jn.contains("split") && !jn.at("split").is_null()) {
                const auto& js = jn.at("split");
                Split s;
                s.variable = js.at("variable").get<std::size_t>();
                s.kind = parse_kind(js.at("kind").get<std::string>());
                s.value = s.kind == VariableKind::numeric ? js.at("threshold").get<double>()
                                                          : static_cast<double>(js.at("code").get<long long>());
                n.split = s;
                n.left = jn.at("left").get<int>();
                n.right = jn.at("right").get<int>();
            }
            if (!jn.at("model").is_null()) {
                n.model = model_from_json(jn.at("model"));
            }
            nodes.push_back(std::move(n));
        }
        Tree tree(std::move(schema), family, std::move(nodes));
        if (j.contains("depth") && j.at("depth").get<int>() != tree.depth()) {
            throw DecodeError("recorded depth does not match the node array");
        }
        if (j.contains("leaf_count") && j.at("leaf_count").get<std::size_t>() != tree.leaf_count()) {
            throw DecodeError("recorded leaf count does not match the node array");
        }
        return tree;
    });
}

json parse_document(std::string_view document, std::string_view expected_format) {
    json j;
    try {
        j = json::parse(document.begin(), document.end());
    } catch (const json::exception& e) {
        throw DecodeError(std::string("malformed document: ") + e.what());
    }
    if (!j.is_object() || !j.contains("format") || !j.at("format").is_string()) {
        throw DecodeError("document has no format header");
    }
    const auto format = j.at("format").get<std::string>();
    if (format != expected_format) {
        throw DecodeError("format/version mismatch: expected '" + std::string(expected_format) + "', found '" +
                          format + "'");
    }
    return j;
}

std::string serialize(const Tree& tree) {
    return tree_to_json(tree).dump(1) + "\n";
}

Tree deserialize(std::string_view document) {
    return tree_from_json(parse_document(document, kTreeFormat));
}

} // namespace mst
