#pragma once

#include "mst/dataset.hpp"
#include "mst/leaf_models.hpp"
#include "mst/predictor.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mst {

/// Numeric splits send x[j] <= s left; categorical splits send x[j] == s left.
struct Split {
    std::size_t variable = 0;
    VariableKind kind = VariableKind::numeric;
    /// Threshold for numeric splits, category code for categorical ones.
    double value = 0.0;

    bool goes_left(double x) const { return kind == VariableKind::numeric ? x <= value : x == value; }

    bool operator==(const Split&) const = default;
};

/// What routing does with a categorical code the schema does not know.
enum class RoutingMode {
    lenient, ///< unknown codes fail the equality and go right
    strict,  ///< unknown codes raise SchemaError
};

struct TreeNode {
    std::optional<Split> split;
    int left = -1;
    int right = -1;
    /// Contiguous 0..L-1 over leaves (depth-first, left before right); -1 for internal nodes.
    int leaf_id = -1;
    /// Response model fit on the node's training rows. Internal nodes keep the
    /// model they held before being split; pruning collapses onto it.
    std::optional<LeafModel> model;
    double train_loss = 0.0;
    std::size_t train_rows = 0;

    bool is_leaf() const { return !split.has_value(); }
    bool operator==(const TreeNode&) const = default;
};

/// Immutable binary segmentation tree. Node 0 is the root.
class Tree final : public Predictor {
public:
    Tree() = default;
    /// Validates structure and renumbers leaf ids depth-first.
    Tree(ContextSchema schema, LeafFamily family, std::vector<TreeNode> nodes);

    static Tree single_leaf(ContextSchema schema, LeafFamily family, LeafModel model, double train_loss = 0.0,
                            std::size_t train_rows = 0);

    const ContextSchema& schema() const { return schema_; }
    LeafFamily family() const { return family_; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const TreeNode& node(std::size_t i) const { return nodes_.at(i); }
    std::size_t leaf_count() const { return leaf_nodes_.size(); }
    int depth() const { return depth_; }
    /// Node index of leaf `leaf_id`.
    int leaf_node(int leaf_id) const { return leaf_nodes_.at(static_cast<std::size_t>(leaf_id)); }
    const LeafModel& leaf_model(int leaf_id) const;

    int route(std::span<const double> context, RoutingMode mode = RoutingMode::lenient) const;
    int route_node(std::span<const double> context, RoutingMode mode = RoutingMode::lenient) const;

    /// Row indices of `data` per leaf id; the lists partition the dataset.
    std::vector<std::vector<std::size_t>> partition(const Dataset& data) const;

    void predict(const Dataset& data, std::size_t row, std::vector<double>& out) const override;

    bool operator==(const Tree& other) const {
        return schema_ == other.schema_ && family_ == other.family_ && nodes_ == other.nodes_;
    }

private:
    ContextSchema schema_;
    LeafFamily family_ = LeafFamily::mnl;
    std::vector<TreeNode> nodes_;
    std::vector<int> leaf_nodes_;
    int depth_ = 0;
};

/// Sum over leaves of the leaf model's loss on the rows routed there (no refit).
double tree_loss(const Tree& tree, const Dataset& data);

enum class DescribeFormat { text, dot };

std::string describe(const Tree& tree, DescribeFormat format = DescribeFormat::text);
/// "age <= 40" / "location = USA".
std::string describe_split(const Split& split, const ContextSchema& schema);

} // namespace mst
