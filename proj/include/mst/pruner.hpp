#pragma once

#include "mst/dataset.hpp"
#include "mst/tree.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace mst {

enum class PruneMetric {
    family_loss, ///< the leaf family's training loss (NLL for MNL, squared error otherwise)
    mse,         ///< Brier score for choice rows, squared error for auctions
    nll,         ///< negative log-likelihood of the realized outcome
};

std::string_view to_string(PruneMetric m);
PruneMetric parse_prune_metric(std::string_view name);

struct PruneConfig {
    PruneMetric metric = PruneMetric::family_loss;
};

struct PruneStep {
    double alpha = 0.0;
    std::size_t leaves = 0;
    /// Mean per-row validation metric of the subtree.
    double validation_metric = 0.0;
};

struct PruneResult {
    Tree tree;
    /// Weakest-link sequence from the input tree (alpha = 0) down to the root.
    std::vector<PruneStep> sequence;
    std::size_t selected = 0;
};

/// Cost-complexity pruning. Internal nodes collapse onto the model they held
/// during growth; when a node has none, it is refit on `train` rows warm-started
/// from its nearest ancestor's model (so `train` is required in that case).
PruneResult prune_with_path(const Tree& tree, const Dataset& validation, const PruneConfig& cfg = {},
                            const Dataset* train = nullptr);
Tree prune(const Tree& tree, const Dataset& validation, const PruneConfig& cfg = {}, const Dataset* train = nullptr);

/// Per-row validation metric under `metric` for a leaf model.
double prune_row_metric(const LeafModel& model, const Dataset& data, std::size_t row, PruneMetric metric,
                        std::vector<double>& scratch);

/// True when `sub` is `full` with some internal nodes collapsed into leaves
/// holding the same model.
bool is_structural_subtree(const Tree& sub, const Tree& full);

} // namespace mst
