#include "mst/metrics.hpp"

#include "mst/datagen.hpp"
#include "mst/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mst {

std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::mae:
        return "mae";
    case Metric::mse:
        return "mse";
    case Metric::nll:
        return "nll";
    case Metric::auc:
        return "auc";
    }
    return "mae";
}

Metric parse_metric(std::string_view name) {
    for (auto m : {Metric::mae, Metric::mse, Metric::nll, Metric::auc}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw Error("unknown metric '" + std::string(name) + "'");
}

std::string format_real(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) {
        throw Error("cannot format real");
    }
    return std::string(buf, end);
}

double squared_error_row(const Dataset& data, std::size_t row, std::span<const double> pred) {
    if (data.kind() == PayloadKind::auction) {
        const double d = pred[0] - data.win(row);
        return d * d;
    }
    const auto y = static_cast<std::size_t>(data.choice(row));
    double s = 0.0;
    for (std::size_t h = 0; h < pred.size(); ++h) {
        const double d = pred[h] - (h == y ? 1.0 : 0.0);
        s += d * d;
    }
    return s;
}

double nll_row(const Dataset& data, std::size_t row, std::span<const double> pred) {
    double p;
    if (data.kind() == PayloadKind::auction) {
        p = data.win(row) == 1 ? pred[0] : 1.0 - pred[0];
    } else {
        p = pred[static_cast<std::size_t>(data.choice(row))];
    }
    return -std::log(std::max(p, kNllFloor));
}

double mae_row(std::span<const double> pred, std::span<const double> truth, bool include_no_purchase) {
    if (pred.size() != truth.size()) {
        throw Error("prediction and truth vectors differ in length");
    }
    const std::size_t first = include_no_purchase || pred.size() == 1 ? 0 : 1;
    double s = 0.0;
    for (std::size_t h = first; h < pred.size(); ++h) {
        s += std::abs(pred[h] - truth[h]);
    }
    return s / static_cast<double>(pred.size() - first);
}

namespace {

std::vector<std::size_t> rows_or_all(const Dataset& data, std::span<const std::size_t> rows) {
    return rows.empty() ? data.all_rows() : std::vector<std::size_t>(rows.begin(), rows.end());
}

double auc_over(const Predictor& model, const Dataset& test, std::span<const std::size_t> rows) {
    if (test.kind() != PayloadKind::auction) {
        throw Error("AUC needs auction rows");
    }
    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<double> pred;
    for (std::size_t r : rows) {
        model.predict(test, r, pred);
        scores.push_back(pred[0]);
        labels.push_back(test.win(r));
    }
    return roc_auc(scores, labels);
}

} // namespace

double metric_value(Metric metric, const Predictor& model, const Dataset& test, std::span<const std::size_t> rows,
                    const GroundTruth* truth, const MaeOptions& options) {
    const auto idx = rows_or_all(test, rows);
    if (idx.empty()) {
        throw Error("metric over an empty row set");
    }
    if (metric == Metric::auc) {
        return auc_over(model, test, idx);
    }
    if (metric == Metric::mae && truth == nullptr) {
        throw Error("MAE needs a ground-truth oracle");
    }
    std::vector<double> pred;
    std::vector<double> want;
    double sum = 0.0;
    for (std::size_t r : idx) {
        model.predict(test, r, pred);
        switch (metric) {
        case Metric::mae:
            truth->true_probs(test, r, want, options.posterior_mixture);
            sum += mae_row(pred, want, options.include_no_purchase);
            break;
        case Metric::mse:
            sum += squared_error_row(test, r, pred);
            break;
        case Metric::nll:
            sum += nll_row(test, r, pred);
            break;
        case Metric::auc:
            break;
        }
    }
    return sum / static_cast<double>(idx.size());
}

double mae_vs_truth(const Predictor& model, const GroundTruth& truth, const Dataset& test, const MaeOptions& options) {
    return metric_value(Metric::mae, model, test, {}, &truth, options);
}

double brier(const Predictor& model, const Dataset& test) { return metric_value(Metric::mse, model, test, {}); }

double mean_nll(const Predictor& model, const Dataset& test) { return metric_value(Metric::nll, model, test, {}); }

double roc_auc(const Predictor& model, const Dataset& test) { return metric_value(Metric::auc, model, test, {}); }

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw Error("scores and labels differ in length");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Rank-sum with midranks for ties.
    double pos = 0.0;
    double neg = 0.0;
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                rank_sum += midrank;
                pos += 1.0;
            } else if (labels[order[k]] == 0) {
                neg += 1.0;
            } else {
                throw Error("AUC labels must be 0 or 1");
            }
        }
        i = j;
    }
    if (pos == 0.0 || neg == 0.0) {
        throw Error("AUC needs both positive and negative labels");
    }
    return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::vector<std::pair<double, double>> roc_curve(std::span<const double> scores, std::span<const int> labels) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double pos = 0.0;
    double neg = 0.0;
    for (int l : labels) {
        (l == 1 ? pos : neg) += 1.0;
    }
    if (pos == 0.0 || neg == 0.0) {
        throw Error("ROC curve needs both positive and negative labels");
    }
    std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? tp : fp) += 1.0;
            ++j;
        }
        pts.emplace_back(fp / neg, tp / pos);
        i = j;
    }
    return pts;
}

std::vector<LeafImprovement> per_leaf_improvement(const Predictor& model_a, const Predictor& model_b,
                                                  const Tree& router, const Dataset& test, Metric metric,
                                                  std::size_t min_rows, const GroundTruth* truth) {
    std::vector<LeafImprovement> out;
    const auto parts = router.partition(test);
    for (std::size_t l = 0; l < parts.size(); ++l) {
        if (parts[l].size() <= min_rows) {
            continue;
        }
        LeafImprovement li;
        li.leaf_id = static_cast<int>(l);
        li.rows = parts[l].size();
        li.metric_a = metric_value(metric, model_a, test, parts[l], truth);
        li.metric_b = metric_value(metric, model_b, test, parts[l], truth);
        if (metric == Metric::auc) {
            // Higher is better for AUC.
            li.improvement_percent = li.metric_b == 0.0 ? 0.0 : 100.0 * (li.metric_a - li.metric_b) / li.metric_b;
        } else {
            li.improvement_percent = li.metric_b == 0.0 ? 0.0 : 100.0 * (li.metric_b - li.metric_a) / li.metric_b;
        }
        out.push_back(li);
    }
    return out;
}

MetricsReport evaluate_report(const Predictor& model, const Dataset& test, std::span<const Metric> metrics,
                              const Tree* router, const GroundTruth* truth, const MaeOptions& options) {
    MetricsReport rep;
    std::vector<std::vector<std::size_t>> parts;
    if (router != nullptr) {
        parts = router->partition(test);
    }
    for (Metric m : metrics) {
        const std::string name(to_string(m));
        rep.overall[name] = metric_value(m, model, test, {}, truth, options);
        if (m == Metric::mae && truth != nullptr) {
            MaeOptions other = options;
            other.include_no_purchase = !options.include_no_purchase;
            rep.overall[other.include_no_purchase ? "mae_with_no_purchase" : "mae_options_only"] =
                metric_value(m, model, test, {}, truth, other);
        }
        for (std::size_t l = 0; l < parts.size(); ++l) {
            if (parts[l].empty()) {
                rep.per_leaf[name][static_cast<int>(l)] = {0.0, 0};
                continue;
            }
            double v;
            try {
                v = metric_value(m, model, test, parts[l], truth, options);
            } catch (const Error&) {
                // AUC is undefined on single-class leaves.
                v = std::nan("");
            }
            rep.per_leaf[name][static_cast<int>(l)] = {v, parts[l].size()};
        }
    }
    return rep;
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json j;
    j["overall"] = nlohmann::json::object();
    for (const auto& [k, v] : overall) {
        j["overall"][k] = v;
    }
    j["per_leaf"] = nlohmann::json::object();
    for (const auto& [metric, leaves] : per_leaf) {
        auto arr = nlohmann::json::array();
        for (const auto& [leaf, lm] : leaves) {
            arr.push_back({{"leaf_id", leaf},
                           {"value", std::isfinite(lm.value) ? nlohmann::json(lm.value) : nlohmann::json(nullptr)},
                           {"rows", lm.rows}});
        }
        j["per_leaf"][metric] = std::move(arr);
    }
    j["slices"] = nlohmann::json::object();
    for (const auto& [label, values] : slices) {
        for (const auto& [k, v] : values) {
            j["slices"][label][k] = v;
        }
    }
    return j;
}

std::string MetricsReport::to_tsv() const {
    std::ostringstream os;
    os << "metric\tvalue\n";
    for (const auto& [k, v] : overall) {
        os << k << '\t' << format_real(v) << '\n';
    }
    if (!per_leaf.empty()) {
        os << "\nmetric\tleaf_id\trows\tvalue\n";
        for (const auto& [metric, leaves] : per_leaf) {
            for (const auto& [leaf, lm] : leaves) {
                os << metric << '\t' << leaf << '\t' << lm.rows << '\t'
                   << (std::isfinite(lm.value) ? format_real(lm.value) : "nan") << '\n';
            }
        }
    }
    if (!slices.empty()) {
        os << "\nslice\tmetric\tvalue\n";
        for (const auto& [label, values] : slices) {
            for (const auto& [k, v] : values) {
                os << label << '\t' << k << '\t' << format_real(v) << '\n';
            }
        }
    }
    return os.str();
}

std::string comparison_table(const std::vector<std::string>& models, const std::vector<std::string>& slices,
                             const std::vector<std::vector<double>>& values) {
    if (values.size() != models.size()) {
        throw Error("comparison table needs one value row per model");
    }
    std::ostringstream os;
    os << "model";
    for (const auto& s : slices) {
        os << '\t' << s;
    }
    os << "\tAvg.\t% Imp.\n";
    double base = 0.0;
    for (std::size_t i = 0; i < models.size(); ++i) {
        if (values[i].size() != slices.size()) {
            throw Error("comparison table row has the wrong number of slices");
        }
        const double avg = values[i].empty()
                               ? 0.0
                               : std::accumulate(values[i].begin(), values[i].end(), 0.0) /
                                     static_cast<double>(values[i].size());
        if (i == 0) {
            base = avg;
        }
        os << models[i];
        for (double v : values[i]) {
            os << '\t' << format_real(v);
        }
        const double imp = base == 0.0 ? 0.0 : 100.0 * (base - avg) / base;
        os << '\t' << format_real(avg) << '\t' << format_real(imp) << '\n';
    }
    return os.str();
}

} // namespace mst
