#include "mst/tree.hpp"

#include "mst/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace mst {

Tree::Tree(ContextSchema schema, LeafFamily family, std::vector<TreeNode> nodes)
    : schema_(std::move(schema)), family_(family), nodes_(std::move(nodes)) {
    if (nodes_.empty()) {
        throw Error("a tree needs at least one node");
    }
    std::vector<char> seen(nodes_.size(), 0);
    // Iterative depth-first walk; left child first so leaf ids follow reading order.
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
            throw Error("tree node index out of range");
        }
        if (seen[static_cast<std::size_t>(id)]) {
            throw Error("tree nodes form a cycle or share a child");
        }
        seen[static_cast<std::size_t>(id)] = 1;
        auto& n = nodes_[static_cast<std::size_t>(id)];
        depth_ = std::max(depth_, d);
        if (n.is_leaf()) {
            if (n.left != -1 || n.right != -1) {
                throw Error("leaf node has children");
            }
            if (n.model && n.model->family() != family_) {
                throw Error("leaf model family differs from the tree family");
            }
            n.leaf_id = static_cast<int>(leaf_nodes_.size());
            leaf_nodes_.push_back(id);
            continue;
        }
        n.leaf_id = -1;
        const auto& s = *n.split;
        if (s.variable >= schema_.size()) {
            throw Error("split variable outside the schema");
        }
        if (schema_[s.variable].kind != s.kind) {
            throw Error("split kind does not match variable '" + schema_[s.variable].name + "'");
        }
        if (s.kind == VariableKind::categorical) {
            const double code = s.value;
            if (code < 0 || code != std::floor(code) || code >= static_cast<double>(schema_[s.variable].categories.size())) {
                throw Error("categorical split code not in schema for '" + schema_[s.variable].name + "'");
            }
        } else if (!std::isfinite(s.value)) {
            throw Error("numeric split threshold must be finite");
        }
        if (n.left < 0 || n.right < 0) {
            throw Error("internal node needs two children");
        }
        stack.push_back({n.right, d + 1});
        stack.push_back({n.left, d + 1});
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw Error("tree has unreachable nodes");
    }
}

Tree Tree::single_leaf(ContextSchema schema, LeafFamily family, LeafModel model, double train_loss,
                       std::size_t train_rows) {
    TreeNode leaf;
    leaf.model = std::move(model);
    leaf.train_loss = train_loss;
    leaf.train_rows = train_rows;
    return Tree(std::move(schema), family, {std::move(leaf)});
}

const LeafModel& Tree::leaf_model(int leaf_id) const {
    const auto& n = nodes_.at(static_cast<std::size_t>(leaf_node(leaf_id)));
    if (!n.model) {
        throw Error("leaf " + std::to_string(leaf_id) + " has no response model");
    }
    return *n.model;
}

int Tree::route_node(std::span<const double> context, RoutingMode mode) const {
    if (context.size() != schema_.size()) {
        throw SchemaError("context has " + std::to_string(context.size()) + " values, tree schema has " +
                          std::to_string(schema_.size()));
    }
    if (mode == RoutingMode::strict) {
        for (std::size_t j = 0; j < schema_.size(); ++j) {
            if (schema_[j].kind == VariableKind::categorical) {
                const double c = context[j];
                if (c < 0 || c >= static_cast<double>(schema_[j].categories.size()) || c != std::floor(c)) {
                    throw SchemaError("unknown category code for '" + schema_[j].name + "'");
                }
            }
        }
    }
    int id = 0;
    while (true) {
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        if (n.is_leaf()) {
            return id;
        }
        id = n.split->goes_left(context[n.split->variable]) ? n.left : n.right;
    }
}

int Tree::route(std::span<const double> context, RoutingMode mode) const {
    return nodes_[static_cast<std::size_t>(route_node(context, mode))].leaf_id;
}

std::vector<std::vector<std::size_t>> Tree::partition(const Dataset& data) const {
    std::vector<std::vector<std::size_t>> parts(leaf_count());
    for (std::size_t r = 0; r < data.size(); ++r) {
        parts[static_cast<std::size_t>(route(data.context(r)))].push_back(r);
    }
    return parts;
}

void Tree::predict(const Dataset& data, std::size_t row, std::vector<double>& out) const {
    leaf_model(route(data.context(row))).predict(data, row, out);
}

double tree_loss(const Tree& tree, const Dataset& data) {
    if (data.empty()) {
        return 0.0;
    }
    const auto parts = tree.partition(data);
    double total = 0.0;
    for (std::size_t l = 0; l < parts.size(); ++l) {
        if (!parts[l].empty()) {
            total += tree.leaf_model(static_cast<int>(l)).loss(data, parts[l]);
        }
    }
    return total;
}

std::string describe_split(const Split& split, const ContextSchema& schema) {
    std::ostringstream os;
    const auto& var = schema[split.variable];
    if (split.kind == VariableKind::numeric) {
        os.precision(6);
        os << var.name << " <= " << split.value;
    } else {
        os << var.name << " = " << var.categories.at(static_cast<std::size_t>(split.value));
    }
    return os.str();
}

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    return out;
}

std::string leaf_label(const TreeNode& n) {
    std::string s = "leaf " + std::to_string(n.leaf_id);
    if (n.train_rows > 0) {
        s += " (n=" + std::to_string(n.train_rows) + ")";
    }
    s += ": ";
    s += n.model ? n.model->summary() : std::string("(no model)");
    return s;
}

} // namespace

std::string describe(const Tree& tree, DescribeFormat format) {
    std::ostringstream os;
    if (format == DescribeFormat::text) {
        std::function<void(int, int)> walk = [&](int id, int indent) {
            const auto& n = tree.node(static_cast<std::size_t>(id));
            os << std::string(static_cast<std::size_t>(indent) * 2, ' ');
            if (n.is_leaf()) {
                os << leaf_label(n) << '\n';
                return;
            }
            os << describe_split(*n.split, tree.schema()) << '\n';
            walk(n.left, indent + 1);
            walk(n.right, indent + 1);
        };
        walk(0, 0);
        return os.str();
    }
    os << "digraph mst {\n  node [shape=box];\n";
    for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
        const auto& n = tree.node(i);
        const std::string label = n.is_leaf() ? leaf_label(n) : describe_split(*n.split, tree.schema());
        os << "  n" << i << " [label=\"" << dot_escape(label) << "\"];\n";
        if (!n.is_leaf()) {
            os << "  n" << i << " -> n" << n.left << " [label=\"yes\"];\n";
            os << "  n" << i << " -> n" << n.right << " [label=\"no\"];\n";
        }
    }
    os << "}\n";
    return os.str();
}

} // namespace mst
