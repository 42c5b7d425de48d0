#pragma once

#include "mst/trainer.hpp"

#include <map>
#include <string>
#include <string_view>

namespace mst {

/// Flat key=value settings. Keys use the long command-line flag names without
/// the leading dashes (e.g. "max-depth = 5"); '#' starts a comment.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::string_view text, const std::string& source = "<config>");
ConfigMap load_config(const std::string& path);

/// Applies one training key to `config`. Returns false for keys it does not own.
bool apply_train_key(TrainConfig& config, const std::string& key, const std::string& value);

/// Maps TrainConfig field names ("min_leaf_size", "fit_config.l2_ridge", ...)
/// to the flag-style key; other keys are returned unchanged.
std::string canonical_key(const std::string& key);

/// Keys apply_train_key understands.
const std::vector<std::string>& train_keys();

double parse_real_value(const std::string& key, const std::string& value);
long long parse_int_value(const std::string& key, const std::string& value);
bool parse_bool_value(const std::string& key, const std::string& value);

} // namespace mst
