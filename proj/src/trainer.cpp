#include "mst/trainer.hpp"

#include "mst/error.hpp"
#include "mst/parallel.hpp"
#include "mst/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace mst {

namespace {

constexpr double kAcceptance = 1e-9;

bool is_mnl(LeafFamily f) {
    return f == LeafFamily::mnl || f == LeafFamily::mnl_option_specific;
}

} // namespace

void TrainConfig::validate() const {
    if (min_leaf_size < 1) {
        throw Error("min_leaf_size must be at least 1");
    }
    if (q_split < 1) {
        throw Error("q_split must be at least 1");
    }
    if (worker_count < 1) {
        throw Error("worker_count must be at least 1");
    }
    if (max_depth && *max_depth < 0) {
        throw Error("max_depth must be nonnegative");
    }
    if (!(min_child_fraction >= 0.0 && min_child_fraction < 0.5)) {
        throw Error("min_child_fraction must lie in [0, 0.5)");
    }
    fit_config.validate();
}

FitConfig node_fit_config(const TrainConfig& config, std::size_t rows, std::uint64_t stream) {
    FitConfig cfg = config.fit_config;
    cfg.warm_start.clear();
    if (is_mnl(config.family) && rows > config.adaptive_switch_threshold) {
        cfg.optimizer = Optimizer::sgd;
    }
    cfg.seed = derive_key(config.seed, stream);
    return cfg;
}

std::vector<Split> candidate_splits(const Dataset& data, std::span<const std::size_t> rows, std::size_t variable,
                                    int q_split) {
    std::vector<Split> out;
    if (rows.empty()) {
        return out;
    }
    const auto& var = data.schema()[variable];
    if (var.kind == VariableKind::categorical) {
        std::vector<char> present(var.categories.size(), 0);
        std::size_t distinct = 0;
        for (std::size_t r : rows) {
            const auto code = static_cast<std::size_t>(data.context_value(r, variable));
            if (code < present.size() && !present[code]) {
                present[code] = 1;
                ++distinct;
            }
        }
        if (distinct < 2) {
            return out;
        }
        for (std::size_t c = 0; c < present.size(); ++c) {
            if (present[c]) {
                out.push_back({variable, VariableKind::categorical, static_cast<double>(c)});
            }
        }
        return out;
    }

    std::vector<double> values;
    values.reserve(rows.size());
    for (std::size_t r : rows) {
        values.push_back(data.context_value(r, variable));
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    const std::size_t d = values.size();
    if (d < 2) {
        return out;
    }
    // Every q-th percentile: levels q, 2q, ... below 100, at index ceil(level * d / 100) - 1.
    const auto q = static_cast<std::size_t>(q_split);
    for (std::size_t level = q; level < 100; level += q) {
        const std::size_t pos = (level * d + 99) / 100 - 1;
        const double t = values[std::min(pos, d - 1)];
        if (t >= values.back()) {
            continue;
        }
        if (out.empty() || out.back().value != t) {
            out.push_back({variable, VariableKind::numeric, t});
        }
    }
    return out;
}

SplitEvaluation evaluate_split(const Dataset& data, std::span<const std::size_t> rows, const Split& split,
                               const TrainConfig& config, const LeafModel* warm_left, const LeafModel* warm_right,
                               std::uint64_t stream) {
    SplitEvaluation ev;
    for (std::size_t r : rows) {
        (split.goes_left(data.context_value(r, split.variable)) ? ev.left_rows : ev.right_rows).push_back(r);
    }
    const auto need = std::max<std::size_t>(
        config.min_leaf_size,
        static_cast<std::size_t>(std::ceil(config.min_child_fraction * static_cast<double>(rows.size()) - 1e-9)));
    if (ev.left_rows.size() < need || ev.right_rows.size() < need || ev.left_rows.empty() || ev.right_rows.empty()) {
        return ev;
    }
    ev.left = fit_leaf(config.family, data, ev.left_rows, node_fit_config(config, ev.left_rows.size(), stream * 2),
                       warm_left);
    ev.right = fit_leaf(config.family, data, ev.right_rows,
                        node_fit_config(config, ev.right_rows.size(), stream * 2 + 1), warm_right);
    ev.left_loss = ev.left->report.loss;
    ev.right_loss = ev.right->report.loss;
    ev.feasible = true;
    return ev;
}

SplitSearchResult select_split(const Dataset& data, std::span<const std::size_t> rows, const LeafModel& parent_model,
                               double parent_loss, const TrainConfig& config, std::uint64_t node_path) {
    SplitSearchResult result;
    result.parent_loss = parent_loss;
    if (rows.size() < 2 * config.min_leaf_size) {
        return result;
    }
    const LeafModel* parent = config.warm_starts ? &parent_model : nullptr;
    double best = std::numeric_limits<double>::infinity();
    std::optional<SplitEvaluation> best_eval;
    Split best_split;
    std::uint64_t candidate = 0;

    for (std::size_t j = 0; j < data.schema().size(); ++j) {
        const auto splits = candidate_splits(data, rows, j, config.q_split);
        // Numeric thresholds are visited in ascending order; each candidate is
        // warm-started from the previous feasible one.
        std::optional<LeafModel> chain_left;
        std::optional<LeafModel> chain_right;
        for (const auto& s : splits) {
            const LeafModel* wl = parent;
            const LeafModel* wr = parent;
            if (config.warm_starts && s.kind == VariableKind::numeric && chain_left) {
                wl = &*chain_left;
                wr = &*chain_right;
            }
            auto ev = evaluate_split(data, rows, s, config, wl, wr, derive_key(node_path, ++candidate));
            if (!ev.feasible) {
                continue;
            }
            ++result.evaluations;
            result.iterations += ev.left->report.iterations + ev.right->report.iterations;
            result.all_converged = result.all_converged && ev.left->report.converged && ev.right->report.converged;
            if (s.kind == VariableKind::numeric) {
                chain_left = ev.left->model;
                chain_right = ev.right->model;
            }
            const double total = ev.left_loss + ev.right_loss;
            // Near-ties keep the earlier candidate (lower variable, smaller threshold).
            if (total < best - kAcceptance) {
                best = total;
                best_split = s;
                best_eval = std::move(ev);
            }
        }
    }
    if (best_eval && parent_loss - best > kAcceptance) {
        result.best_split = best_split;
        result.left_loss = best_eval->left_loss;
        result.right_loss = best_eval->right_loss;
        result.left_model = std::move(best_eval->left->model);
        result.right_model = std::move(best_eval->right->model);
        result.left_rows = std::move(best_eval->left_rows);
        result.right_rows = std::move(best_eval->right_rows);
    }
    return result;
}

std::string format_progress(const DepthProgress& p) {
    std::ostringstream os;
    os << "depth=" << p.depth << " nodes=" << p.nodes << " split_evals=" << p.split_evaluations
       << " elapsed_ms=" << p.elapsed_ms;
    return os.str();
}

GrowResult grow(const Dataset& train, const TrainConfig& config,
                const std::function<void(const DepthProgress&)>& progress) {
    config.validate();
    if (train.empty()) {
        throw Error("cannot grow a tree on empty training data");
    }
    if (train.size() < config.min_leaf_size) {
        throw Error("training data has fewer rows than min_leaf_size");
    }
    if (train.kind() != payload_kind(config.family)) {
        throw Error("leaf family does not match the training payload");
    }
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::size_t> root_rows = train.all_rows();
    if (config.family == LeafFamily::isotonic) {
        // Partitions keep this order, so every child fit sees bid-sorted rows.
        std::stable_sort(root_rows.begin(), root_rows.end(),
                         [&](std::size_t a, std::size_t b) { return train.bid(a) < train.bid(b); });
    }

    GrowResult out;
    auto root_fit = fit_leaf(config.family, train, root_rows, node_fit_config(config, root_rows.size(), 1), nullptr);
    out.stats.total_iterations += root_fit.report.iterations;
    out.stats.all_converged = out.stats.all_converged && root_fit.report.converged;

    std::vector<TreeNode> nodes(1);
    nodes[0].model = std::move(root_fit.model);
    nodes[0].train_loss = root_fit.report.loss;
    nodes[0].train_rows = root_rows.size();

    struct Work {
        int node;
        std::uint64_t path;
        std::vector<std::size_t> rows;
    };
    std::vector<Work> frontier;
    frontier.push_back({0, 1, std::move(root_rows)});

    for (int depth = 0; !frontier.empty(); ++depth) {
        if (config.max_depth && depth >= *config.max_depth) {
            break;
        }
        std::vector<SplitSearchResult> results(frontier.size());
        run_batched(frontier.size(), static_cast<std::size_t>(config.worker_count), [&](std::size_t i) {
            const auto& w = frontier[i];
            const auto& n = nodes[static_cast<std::size_t>(w.node)];
            results[i] = select_split(train, w.rows, *n.model, n.train_loss, config, w.path);
        });

        DepthProgress level;
        level.depth = depth;
        level.nodes = frontier.size();
        std::vector<Work> next;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            auto& r = results[i];
            level.split_evaluations += r.evaluations;
            out.stats.total_iterations += r.iterations;
            out.stats.all_converged = out.stats.all_converged && r.all_converged;
            if (!r.best_split) {
                continue;
            }
            const int left = static_cast<int>(nodes.size());
            const int right = left + 1;
            TreeNode l;
            l.model = std::move(r.left_model);
            l.train_loss = r.left_loss;
            l.train_rows = r.left_rows.size();
            TreeNode rt;
            rt.model = std::move(r.right_model);
            rt.train_loss = r.right_loss;
            rt.train_rows = r.right_rows.size();
            auto& parent = nodes[static_cast<std::size_t>(frontier[i].node)];
            parent.split = r.best_split;
            parent.left = left;
            parent.right = right;
            nodes.push_back(std::move(l));
            nodes.push_back(std::move(rt));
            next.push_back({left, frontier[i].path * 2, std::move(r.left_rows)});
            next.push_back({right, frontier[i].path * 2 + 1, std::move(r.right_rows)});
        }
        out.stats.split_evaluations += level.split_evaluations;
        level.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                               .count();
        out.stats.levels.push_back(level);
        if (progress) {
            progress(level);
        }
        frontier = std::move(next);
    }
    out.tree = Tree(train.schema(), config.family, std::move(nodes));
    return out;
}

} // namespace mst
