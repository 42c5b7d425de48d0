#include "mst/config.hpp"

#include "mst/error.hpp"
#include "mst/io.hpp"

#include <charconv>
#include <cmath>

namespace mst {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

ConfigMap parse_config(std::string_view text, const std::string& source) {
    ConfigMap out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const auto body = trim(line);
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw IngestError(source, line_no, "expected key = value");
        }
        auto key = trim(std::string_view(body).substr(0, eq));
        auto value = trim(std::string_view(body).substr(eq + 1));
        while (!key.empty() && key.front() == '-') {
            key.erase(key.begin());
        }
        if (key.empty()) {
            throw IngestError(source, line_no, "empty key");
        }
        if (!out.emplace(key, value).second) {
            throw IngestError(source, line_no, "duplicate key '" + key + "'");
        }
    }
    return out;
}

ConfigMap load_config(const std::string& path) { return parse_config(read_file(path), path); }

double parse_real_value(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || ec != std::errc() || p != value.data() + value.size() || !std::isfinite(v)) {
        throw Error("setting '" + key + "' needs a real number, got '" + value + "'");
    }
    return v;
}

long long parse_int_value(const std::string& key, const std::string& value) {
    long long v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (value.empty() || ec != std::errc() || p != value.data() + value.size()) {
        throw Error("setting '" + key + "' needs an integer, got '" + value + "'");
    }
    return v;
}

bool parse_bool_value(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    throw Error("setting '" + key + "' needs true/false, got '" + value + "'");
}

const std::vector<std::string>& train_keys() {
    static const std::vector<std::string> keys = {
        "leaf-family",       "max-depth",       "min-leaf",      "q-split",
        "workers",           "seed",            "optimizer",     "max-iterations",
        "gradient-tolerance", "l2-ridge",       "sgd-batch-size", "sgd-step",
        "adaptive-switch",   "min-child-fraction", "warm-starts"};
    return keys;
}

std::string canonical_key(const std::string& key) {
    static const std::map<std::string, std::string> aliases = {
        {"family", "leaf-family"},
        {"leaf_family", "leaf-family"},
        {"max_depth", "max-depth"},
        {"min_leaf_size", "min-leaf"},
        {"q_split", "q-split"},
        {"quantile_param", "q-split"},
        {"worker_count", "workers"},
        {"adaptive_switch_threshold", "adaptive-switch"},
        {"min_child_fraction", "min-child-fraction"},
        {"warm_starts", "warm-starts"},
        {"fit_config.optimizer", "optimizer"},
        {"fit_config.max_iterations", "max-iterations"},
        {"fit_config.gradient_tolerance", "gradient-tolerance"},
        {"fit_config.l2_ridge", "l2-ridge"},
        {"fit_config.sgd_batch_size", "sgd-batch-size"},
        {"fit_config.sgd_step", "sgd-step"},
    };
    const auto it = aliases.find(key);
    return it == aliases.end() ? key : it->second;
}

bool apply_train_key(TrainConfig& c, const std::string& raw_key, const std::string& value) {
    const std::string key = canonical_key(raw_key);
    auto non_negative = [&](long long v) {
        if (v < 0) {
            throw Error("setting '" + key + "' must be non-negative");
        }
        return v;
    };
    if (key == "leaf-family") {
        c.family = parse_leaf_family(value);
    } else if (key == "max-depth") {
        if (value == "none" || value == "unlimited") {
            c.max_depth.reset();
        } else {
            c.max_depth = static_cast<int>(non_negative(parse_int_value(key, value)));
        }
    } else if (key == "min-leaf") {
        c.min_leaf_size = static_cast<std::size_t>(non_negative(parse_int_value(key, value)));
    } else if (key == "q-split") {
        c.q_split = static_cast<int>(parse_int_value(key, value));
    } else if (key == "workers") {
        c.worker_count = static_cast<int>(parse_int_value(key, value));
    } else if (key == "seed") {
        c.seed = static_cast<std::uint64_t>(non_negative(parse_int_value(key, value)));
        c.fit_config.seed = c.seed;
    } else if (key == "optimizer") {
        c.fit_config.optimizer = parse_optimizer(value);
    } else if (key == "max-iterations") {
        c.fit_config.max_iterations = static_cast<int>(parse_int_value(key, value));
    } else if (key == "gradient-tolerance") {
        c.fit_config.gradient_tolerance = parse_real_value(key, value);
    } else if (key == "l2-ridge") {
        c.fit_config.l2_ridge = parse_real_value(key, value);
    } else if (key == "sgd-batch-size") {
        c.fit_config.sgd_batch_size = static_cast<std::size_t>(non_negative(parse_int_value(key, value)));
    } else if (key == "sgd-step") {
        c.fit_config.sgd_step = parse_real_value(key, value);
    } else if (key == "adaptive-switch") {
        c.adaptive_switch_threshold = static_cast<std::size_t>(non_negative(parse_int_value(key, value)));
    } else if (key == "min-child-fraction") {
        c.min_child_fraction = parse_real_value(key, value);
    } else if (key == "warm-starts") {
        c.warm_starts = parse_bool_value(key, value);
    } else {
        return false;
    }
    return true;
}

} // namespace mst
