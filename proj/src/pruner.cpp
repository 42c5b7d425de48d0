#include "mst/pruner.hpp"

#include "mst/error.hpp"
#include "mst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace mst {

std::string_view to_string(PruneMetric m) {
    switch (m) {
    case PruneMetric::family_loss:
        return "family";
    case PruneMetric::mse:
        return "mse";
    case PruneMetric::nll:
        return "nll";
    }
    return "family";
}

PruneMetric parse_prune_metric(std::string_view name) {
    if (name == "family" || name == "loss") {
        return PruneMetric::family_loss;
    }
    if (name == "mse") {
        return PruneMetric::mse;
    }
    if (name == "nll") {
        return PruneMetric::nll;
    }
    throw Error("unknown prune metric '" + std::string(name) + "'");
}

double prune_row_metric(const LeafModel& model, const Dataset& data, std::size_t row, PruneMetric metric,
                        std::vector<double>& scratch) {
    if (metric == PruneMetric::family_loss) {
        return model.row_loss(data, row);
    }
    model.predict(data, row, scratch);
    return metric == PruneMetric::mse ? squared_error_row(data, row, scratch) : nll_row(data, row, scratch);
}

namespace {

/// Fills in missing node models by refitting on the training rows reaching each node.
std::vector<TreeNode> complete_models(const Tree& tree, const Dataset* train) {
    std::vector<TreeNode> nodes = tree.nodes();
    const bool missing = std::any_of(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.model; });
    if (!missing) {
        return nodes;
    }
    if (train == nullptr) {
        throw Error("tree nodes lack cached models; training data is needed to refit them");
    }
    std::vector<std::vector<std::size_t>> rows(nodes.size());
    for (std::size_t r = 0; r < train->size(); ++r) {
        int id = 0;
        while (true) {
            rows[static_cast<std::size_t>(id)].push_back(r);
            const auto& n = nodes[static_cast<std::size_t>(id)];
            if (n.is_leaf()) {
                break;
            }
            id = n.split->goes_left(train->context_value(r, n.split->variable)) ? n.left : n.right;
        }
    }
    FitConfig cfg;
    std::function<void(int, const LeafModel*)> fill = [&](int id, const LeafModel* ancestor) {
        auto& n = nodes[static_cast<std::size_t>(id)];
        const auto& rs = rows[static_cast<std::size_t>(id)];
        if (!n.model) {
            if (rs.empty()) {
                if (ancestor == nullptr) {
                    throw Error("cannot refit a node without training rows");
                }
                n.model = *ancestor;
            } else {
                auto fit = fit_leaf(tree.family(), *train, rs, cfg, ancestor);
                n.model = std::move(fit.model);
                n.train_loss = fit.report.loss;
            }
            n.train_rows = rs.size();
        }
        if (!n.is_leaf()) {
            fill(n.left, &*n.model);
            fill(n.right, &*n.model);
        }
    };
    fill(0, nullptr);
    return nodes;
}

} // namespace

PruneResult prune_with_path(const Tree& tree, const Dataset& validation, const PruneConfig& cfg, const Dataset* train) {
    if (validation.empty()) {
        throw Error("pruning needs a non-empty validation set");
    }
    std::vector<TreeNode> nodes = complete_models(tree, train);
    const std::size_t count = nodes.size();

    // Validation metric of every node's own model over the rows passing through it.
    std::vector<double> node_val(count, 0.0);
    std::vector<double> scratch;
    for (std::size_t r = 0; r < validation.size(); ++r) {
        int id = 0;
        while (true) {
            const auto& n = nodes[static_cast<std::size_t>(id)];
            node_val[static_cast<std::size_t>(id)] += prune_row_metric(*n.model, validation, r, cfg.metric, scratch);
            if (n.is_leaf()) {
                break;
            }
            id = n.split->goes_left(validation.context_value(r, n.split->variable)) ? n.left : n.right;
        }
    }

    std::vector<char> collapsed(count, 0);
    auto effective_leaf = [&](int id) {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        return n.is_leaf() || collapsed[static_cast<std::size_t>(id)];
    };

    // Depth-first sums over the current subtree rooted at `id`.
    struct Sums {
        double train = 0.0;
        double val = 0.0;
        std::size_t leaves = 0;
    };
    std::function<Sums(int)> subtree = [&](int id) -> Sums {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        if (effective_leaf(id)) {
            return {n.train_loss, node_val[static_cast<std::size_t>(id)], 1};
        }
        const Sums l = subtree(n.left);
        const Sums r = subtree(n.right);
        return {l.train + r.train, l.val + r.val, l.leaves + r.leaves};
    };

    PruneResult result;
    std::vector<std::vector<char>> states;
    const double rows = static_cast<double>(validation.size());
    {
        const Sums s = subtree(0);
        result.sequence.push_back({0.0, s.leaves, s.val / rows});
        states.push_back(collapsed);
    }

    while (!effective_leaf(0)) {
        // Weakest link: smallest per-leaf training-loss improvement.
        std::vector<std::pair<int, double>> links;
        std::function<void(int)> visit = [&](int id) {
            if (effective_leaf(id)) {
                return;
            }
            const auto& n = nodes[static_cast<std::size_t>(id)];
            const Sums s = subtree(id);
            links.emplace_back(id, (n.train_loss - s.train) / static_cast<double>(s.leaves - 1));
            visit(n.left);
            visit(n.right);
        };
        visit(0);
        double g_min = std::numeric_limits<double>::infinity();
        for (const auto& [id, g] : links) {
            g_min = std::min(g_min, g);
        }
        const double tie = 1e-12 * std::max(1.0, std::abs(g_min));
        for (const auto& [id, g] : links) {
            if (g <= g_min + tie) {
                collapsed[static_cast<std::size_t>(id)] = 1;
            }
        }
        const Sums s = subtree(0);
        PruneStep step{g_min, s.leaves, s.val / rows};
        if (result.sequence.size() > 1 && !(step.alpha > result.sequence.back().alpha)) {
            // Same alpha level as the previous collapse: fold into that step.
            step.alpha = result.sequence.back().alpha;
            result.sequence.back() = step;
            states.back() = collapsed;
        } else {
            result.sequence.push_back(step);
            states.push_back(collapsed);
        }
    }

    // Minimal validation metric; ties go to the smaller subtree (later in the sequence).
    std::size_t best = 0;
    for (std::size_t k = 1; k < result.sequence.size(); ++k) {
        if (result.sequence[k].validation_metric <= result.sequence[best].validation_metric) {
            best = k;
        }
    }
    result.selected = best;

    // Rebuild keeping surviving nodes in their original relative order.
    const auto& keep_collapsed = states[best];
    std::vector<int> remap(count, -1);
    std::vector<int> order;
    std::function<void(int)> mark = [&](int id) {
        remap[static_cast<std::size_t>(id)] = 0;
        const auto& n = nodes[static_cast<std::size_t>(id)];
        if (!n.is_leaf() && !keep_collapsed[static_cast<std::size_t>(id)]) {
            mark(n.left);
            mark(n.right);
        }
    };
    mark(0);
    std::vector<TreeNode> kept;
    for (std::size_t i = 0; i < count; ++i) {
        if (remap[i] == 0) {
            remap[i] = static_cast<int>(kept.size());
            kept.push_back(nodes[i]);
        }
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (remap[i] < 0) {
            continue;
        }
        auto& n = kept[static_cast<std::size_t>(remap[i])];
        if (n.is_leaf()) {
            continue;
        }
        if (keep_collapsed[i]) {
            n.split.reset();
            n.left = n.right = -1;
        } else {
            n.left = remap[static_cast<std::size_t>(n.left)];
            n.right = remap[static_cast<std::size_t>(n.right)];
        }
    }
    result.tree = Tree(tree.schema(), tree.family(), std::move(kept));
    return result;
}

Tree prune(const Tree& tree, const Dataset& validation, const PruneConfig& cfg, const Dataset* train) {
    return prune_with_path(tree, validation, cfg, train).tree;
}

bool is_structural_subtree(const Tree& sub, const Tree& full) {
    if (!(sub.schema() == full.schema()) || sub.family() != full.family()) {
        return false;
    }
    std::function<bool(int, int)> match = [&](int a, int b) {
        const auto& ns = sub.node(static_cast<std::size_t>(a));
        const auto& nf = full.node(static_cast<std::size_t>(b));
        if (ns.model != nf.model) {
            return false;
        }
        if (ns.is_leaf()) {
            return true;
        }
        if (nf.is_leaf() || !(*ns.split == *nf.split)) {
            return false;
        }
        return match(ns.left, nf.left) && match(ns.right, nf.right);
    };
    return match(0, 0);
}

} // namespace mst
