#pragma once

#include "mst/dataset.hpp"
#include "mst/leaf_models.hpp"
#include "mst/tree.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mst {

struct TrainConfig {
    LeafFamily family = LeafFamily::mnl;
    std::optional<int> max_depth;
    std::size_t min_leaf_size = 10;
    /// Numeric candidates sit at every q_split-th percentile (q, 2q, ... < 100) of a node's distinct values.
    int q_split = 10;
    int worker_count = 1;
    FitConfig fit_config;
    /// Nodes with more rows than this fit MNL models by SGD; smaller ones use fit_config.optimizer.
    std::size_t adaptive_switch_threshold = 50000;
    /// Each child of an accepted split must hold at least this fraction of the node's rows.
    double min_child_fraction = 0.0;
    bool warm_starts = true;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Quantile thresholds (numeric) or one equality split per observed category,
/// excluding any split that would leave a child empty.
std::vector<Split> candidate_splits(const Dataset& data, std::span<const std::size_t> rows, std::size_t variable,
                                    int q_split);

struct SplitEvaluation {
    bool feasible = false;
    double left_loss = 0.0;
    double right_loss = 0.0;
    std::optional<LeafFit> left;
    std::optional<LeafFit> right;
    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
};

/// Partitions `rows` by `split` (order preserved) and fits one model per child.
/// Children smaller than min_leaf_size or min_child_fraction make the candidate infeasible.
SplitEvaluation evaluate_split(const Dataset& data, std::span<const std::size_t> rows, const Split& split,
                               const TrainConfig& config, const LeafModel* warm_left, const LeafModel* warm_right,
                               std::uint64_t stream = 0);

struct SplitSearchResult {
    std::optional<Split> best_split;
    double left_loss = 0.0;
    double right_loss = 0.0;
    double parent_loss = 0.0;
    std::optional<LeafModel> left_model;
    std::optional<LeafModel> right_model;
    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    std::size_t evaluations = 0;
    long iterations = 0;
    /// Every candidate fit reached the gradient tolerance.
    bool all_converged = true;
};

/// Best split over all variables and candidates; present only when it lowers
/// the summed training loss below parent_loss by more than 1e-9.
SplitSearchResult select_split(const Dataset& data, std::span<const std::size_t> rows, const LeafModel& parent_model,
                               double parent_loss, const TrainConfig& config, std::uint64_t node_path = 1);

struct DepthProgress {
    int depth = 0;
    std::size_t nodes = 0;
    std::size_t split_evaluations = 0;
    long long elapsed_ms = 0;
};

/// "depth=<d> nodes=<k> split_evals=<e> elapsed_ms=<t>"
std::string format_progress(const DepthProgress& p);

struct TrainStats {
    long total_iterations = 0;
    std::size_t split_evaluations = 0;
    bool all_converged = true;
    std::vector<DepthProgress> levels;
};

struct GrowResult {
    Tree tree;
    TrainStats stats;
};

/// Greedy recursive partitioning, breadth-first by depth.
GrowResult grow(const Dataset& train, const TrainConfig& config,
                const std::function<void(const DepthProgress&)>& progress = {});

/// Effective fit settings for a node with `rows` rows (adaptive optimizer switch).
FitConfig node_fit_config(const TrainConfig& config, std::size_t rows, std::uint64_t stream);

} // namespace mst
