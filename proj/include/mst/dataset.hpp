#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mst {

enum class VariableKind { numeric, categorical };

struct ContextVariable {
    std::string name;
    VariableKind kind = VariableKind::numeric;
    /// Category labels; a categorical value is stored as its index in this list.
    std::vector<std::string> categories;

    bool operator==(const ContextVariable&) const = default;
};

class ContextSchema {
public:
    ContextSchema() = default;
    explicit ContextSchema(std::vector<ContextVariable> variables);

    std::size_t size() const { return variables_.size(); }
    const ContextVariable& operator[](std::size_t j) const { return variables_[j]; }
    const std::vector<ContextVariable>& variables() const { return variables_; }

    std::optional<std::size_t> index_of(std::string_view name) const;
    /// -1 when the label is unknown.
    int category_code(std::size_t variable, std::string_view label) const;
    /// Returns the code of `label`, appending it when absent.
    int intern_category(std::size_t variable, std::string_view label);

    bool operator==(const ContextSchema&) const = default;

private:
    std::vector<ContextVariable> variables_;
};

/// Kind of decision/response payload carried by each row.
enum class PayloadKind { choice, auction };

/// Columnar table of observations (context x, decision p, response y).
///
/// Choice rows carry H >= 1 options with `option_dim` features each and a
/// response in {0..H} (0 = no purchase). Auction rows carry a bid >= 0 and a
/// win flag. Categorical context values are stored as category codes.
class Dataset {
public:
    Dataset() = default;
    Dataset(ContextSchema schema, PayloadKind kind, std::size_t option_dim = 0,
            std::vector<std::string> option_feature_names = {});

    void add_choice(std::span<const double> context, std::span<const double> option_features,
                    std::span<const int> option_ids, int choice, std::string row_id = {},
                    int latent = -1);
    void add_auction(std::span<const double> context, double bid, int win, std::string row_id = {},
                     int latent = -1);

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    PayloadKind kind() const { return kind_; }
    const ContextSchema& schema() const { return schema_; }
    ContextSchema& schema() { return schema_; }
    std::size_t context_dim() const { return schema_.size(); }

    std::span<const double> context(std::size_t row) const {
        return {contexts_.data() + row * schema_.size(), schema_.size()};
    }
    double context_value(std::size_t row, std::size_t variable) const {
        return contexts_[row * schema_.size() + variable];
    }

    // Choice payload.
    std::size_t option_dim() const { return option_dim_; }
    const std::vector<std::string>& option_feature_names() const { return option_names_; }
    std::size_t option_count(std::size_t row) const { return offsets_[row + 1] - offsets_[row]; }
    /// Flattened H x option_dim feature block of a row.
    std::span<const double> options(std::size_t row) const {
        return {features_.data() + offsets_[row] * option_dim_, option_count(row) * option_dim_};
    }
    std::span<const int> option_ids(std::size_t row) const {
        return {option_ids_.data() + offsets_[row], option_count(row)};
    }
    int choice(std::size_t row) const { return responses_[row]; }
    /// One past the largest option id in the table (parameter slots for option-specific MNL).
    std::size_t option_slots() const { return option_slots_; }

    // Auction payload.
    double bid(std::size_t row) const { return bids_[row]; }
    int win(std::size_t row) const { return responses_[row]; }

    /// Response y: chosen index for choice rows, win flag for auctions.
    int response(std::size_t row) const { return responses_[row]; }

    bool has_latent() const { return has_latent_; }
    int latent(std::size_t row) const { return has_latent_ ? latent_[row] : -1; }
    const std::string& row_id(std::size_t row) const { return row_ids_[row]; }

    Dataset slice(std::size_t begin, std::size_t end) const;
    Dataset subset(std::span<const std::size_t> rows) const;
    /// Appends rows of `other`, which must share schema and payload shape.
    void append(const Dataset& other);

    std::vector<std::size_t> all_rows() const;

    bool operator==(const Dataset&) const = default;

private:
    void push_common(std::span<const double> context, std::string row_id, int latent);

    ContextSchema schema_;
    PayloadKind kind_ = PayloadKind::choice;
    std::size_t size_ = 0;
    std::vector<double> contexts_;
    std::vector<int> responses_;
    std::vector<std::string> row_ids_;
    std::vector<int> latent_;
    bool has_latent_ = false;

    std::size_t option_dim_ = 0;
    std::vector<std::string> option_names_;
    std::vector<std::size_t> offsets_{0};
    std::vector<double> features_;
    std::vector<int> option_ids_;
    std::size_t option_slots_ = 0;

    std::vector<double> bids_;
};

} // namespace mst
