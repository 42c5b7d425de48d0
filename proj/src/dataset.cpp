#include "mst/dataset.hpp"

#include "mst/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace mst {

ContextSchema::ContextSchema(std::vector<ContextVariable> variables) : variables_(std::move(variables)) {
    std::unordered_set<std::string> seen;
    for (const auto& v : variables_) {
        if (!seen.insert(v.name).second) {
            throw SchemaError("duplicate context variable name '" + v.name + "'");
        }
        if (v.kind == VariableKind::numeric && !v.categories.empty()) {
            throw SchemaError("numeric variable '" + v.name + "' has categories");
        }
    }
}

std::optional<std::size_t> ContextSchema::index_of(std::string_view name) const {
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        if (variables_[j].name == name) {
            return j;
        }
    }
    return std::nullopt;
}

int ContextSchema::category_code(std::size_t variable, std::string_view label) const {
    const auto& cats = variables_.at(variable).categories;
    auto it = std::find(cats.begin(), cats.end(), label);
    return it == cats.end() ? -1 : static_cast<int>(it - cats.begin());
}

int ContextSchema::intern_category(std::size_t variable, std::string_view label) {
    auto& v = variables_.at(variable);
    if (v.kind != VariableKind::categorical) {
        throw SchemaError("variable '" + v.name + "' is not categorical");
    }
    int code = category_code(variable, label);
    if (code >= 0) {
        return code;
    }
    v.categories.emplace_back(label);
    return static_cast<int>(v.categories.size()) - 1;
}

Dataset::Dataset(ContextSchema schema, PayloadKind kind, std::size_t option_dim,
                 std::vector<std::string> option_feature_names)
    : schema_(std::move(schema)), kind_(kind), option_dim_(option_dim),
      option_names_(std::move(option_feature_names)) {
    if (kind_ == PayloadKind::choice) {
        if (option_dim_ == 0) {
            throw Error("choice datasets need at least one option feature");
        }
        if (option_names_.empty()) {
            for (std::size_t c = 0; c < option_dim_; ++c) {
                option_names_.push_back("p" + std::to_string(c));
            }
        }
        if (option_names_.size() != option_dim_) {
            throw Error("option feature names do not match option dimension");
        }
    } else {
        option_dim_ = 0;
        option_names_.clear();
    }
}

void Dataset::push_common(std::span<const double> context, std::string row_id, int latent) {
    if (context.size() != schema_.size()) {
        throw SchemaError("context has " + std::to_string(context.size()) + " values, schema has " +
                          std::to_string(schema_.size()));
    }
    for (std::size_t j = 0; j < context.size(); ++j) {
        if (!std::isfinite(context[j])) {
            throw SchemaError("missing or non-finite context value for '" + schema_[j].name + "'");
        }
        if (schema_[j].kind == VariableKind::categorical) {
            const double code = context[j];
            if (code < 0 || code != std::floor(code) || code >= static_cast<double>(schema_[j].categories.size())) {
                throw SchemaError("invalid category code for '" + schema_[j].name + "'");
            }
        }
    }
    contexts_.insert(contexts_.end(), context.begin(), context.end());
    row_ids_.push_back(row_id.empty() ? std::to_string(size_) : std::move(row_id));
    latent_.push_back(latent);
    has_latent_ = has_latent_ || latent >= 0;
    ++size_;
}

void Dataset::add_choice(std::span<const double> context, std::span<const double> option_features,
                         std::span<const int> option_ids, int choice, std::string row_id, int latent) {
    if (kind_ != PayloadKind::choice) {
        throw Error("add_choice on an auction dataset");
    }
    if (option_features.empty() || option_features.size() % option_dim_ != 0) {
        throw Error("option feature block must hold H >= 1 vectors of the option dimension");
    }
    const std::size_t h = option_features.size() / option_dim_;
    if (option_ids.size() != h) {
        throw Error("option id count does not match option count");
    }
    if (choice < 0 || static_cast<std::size_t>(choice) > h) {
        throw Error("choice outside {0..H}");
    }
    for (double f : option_features) {
        if (!std::isfinite(f)) {
            throw Error("non-finite option feature");
        }
    }
    for (int id : option_ids) {
        if (id < 0) {
            throw Error("option ids must be nonnegative");
        }
        option_slots_ = std::max(option_slots_, static_cast<std::size_t>(id) + 1);
    }
    push_common(context, std::move(row_id), latent);
    features_.insert(features_.end(), option_features.begin(), option_features.end());
    option_ids_.insert(option_ids_.end(), option_ids.begin(), option_ids.end());
    offsets_.push_back(offsets_.back() + h);
    responses_.push_back(choice);
}

void Dataset::add_auction(std::span<const double> context, double bid, int win, std::string row_id, int latent) {
    if (kind_ != PayloadKind::auction) {
        throw Error("add_auction on a choice dataset");
    }
    if (!std::isfinite(bid) || bid < 0) {
        throw Error("bid must be finite and nonnegative");
    }
    if (win != 0 && win != 1) {
        throw Error("auction outcome must be 0 or 1");
    }
    push_common(context, std::move(row_id), latent);
    bids_.push_back(bid);
    responses_.push_back(win);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out(schema_, kind_, kind_ == PayloadKind::choice ? option_dim_ : 0, option_names_);
    for (std::size_t r : rows) {
        if (kind_ == PayloadKind::choice) {
            out.add_choice(context(r), options(r), option_ids(r), choice(r), row_ids_[r], latent_[r]);
        } else {
            out.add_auction(context(r), bids_[r], responses_[r], row_ids_[r], latent_[r]);
        }
    }
    return out;
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, size_);
    begin = std::min(begin, end);
    std::vector<std::size_t> rows(end - begin);
    std::iota(rows.begin(), rows.end(), begin);
    return subset(rows);
}

void Dataset::append(const Dataset& other) {
    if (other.kind_ != kind_ || other.schema_.size() != schema_.size() || other.option_dim_ != option_dim_) {
        throw Error("append: incompatible datasets");
    }
    for (std::size_t r = 0; r < other.size(); ++r) {
        if (kind_ == PayloadKind::choice) {
            add_choice(other.context(r), other.options(r), other.option_ids(r), other.choice(r),
                       other.row_ids_[r], other.latent_[r]);
        } else {
            add_auction(other.context(r), other.bids_[r], other.responses_[r], other.row_ids_[r],
                        other.latent_[r]);
        }
    }
}

std::vector<std::size_t> Dataset::all_rows() const {
    std::vector<std::size_t> rows(size_);
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

} // namespace mst
