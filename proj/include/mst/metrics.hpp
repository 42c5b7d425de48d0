#pragma once

#include "mst/dataset.hpp"
#include "mst/predictor.hpp"
#include "mst/tree.hpp"

#include <json.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mst {

class GroundTruth;

enum class Metric { mae, mse, nll, auc };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view name);

/// Probabilities below this are floored before taking logs.
inline constexpr double kNllFloor = 1e-12;

/// Row error given the model's prediction vector `pred` for `row`.
/// Choice rows: sum over the H+1 outcomes of (p - 1{realized})^2 (max 2).
/// Auction rows: (p_win - y)^2.
double squared_error_row(const Dataset& data, std::size_t row, std::span<const double> pred);
/// -log of the predicted probability of the realized outcome, floored.
double nll_row(const Dataset& data, std::size_t row, std::span<const double> pred);

struct MaeOptions {
    /// Average over the no-purchase entry too, not only the offered options.
    bool include_no_purchase = false;
    /// For kmeans-mixture truths, compare against the posterior mixture instead of the latent cluster.
    bool posterior_mixture = false;
};

/// Absolute error of one row, averaged over the compared entries.
double mae_row(std::span<const double> pred, std::span<const double> truth, bool include_no_purchase);
double mae_vs_truth(const Predictor& model, const GroundTruth& truth, const Dataset& test,
                    const MaeOptions& options = {});
/// Mean squared error (Brier score for choice rows).
double brier(const Predictor& model, const Dataset& test);
double mean_nll(const Predictor& model, const Dataset& test);
/// Mann-Whitney AUC, ties counted one half. Throws when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);
/// AUC of predicted win probabilities on auction rows.
double roc_auc(const Predictor& model, const Dataset& test);

/// Mean per-row metric of `model` over `rows` (all rows when empty). MAE needs `truth`.
double metric_value(Metric metric, const Predictor& model, const Dataset& test, std::span<const std::size_t> rows,
                    const GroundTruth* truth = nullptr, const MaeOptions& options = {});

/// ROC curve points (false positive rate, true positive rate), one per distinct score threshold.
std::vector<std::pair<double, double>> roc_curve(std::span<const double> scores, std::span<const int> labels);

struct LeafImprovement {
    int leaf_id = 0;
    std::size_t rows = 0;
    double metric_a = 0.0;
    double metric_b = 0.0;
    /// 100 * (b - a) / b; positive when model_a is better.
    double improvement_percent = 0.0;
};

/// Per-leaf comparison over the router's segments; only leaves with more than
/// `min_rows` test rows are reported.
std::vector<LeafImprovement> per_leaf_improvement(const Predictor& model_a, const Predictor& model_b,
                                                  const Tree& router, const Dataset& test, Metric metric,
                                                  std::size_t min_rows = 50, const GroundTruth* truth = nullptr);

struct LeafMetric {
    double value = 0.0;
    std::size_t rows = 0;
};

/// Per-run metric record.
struct MetricsReport {
    std::map<std::string, double> overall;
    /// metric name -> leaf id -> value/count.
    std::map<std::string, std::map<int, LeafMetric>> per_leaf;
    /// slice label -> metric name -> value.
    std::map<std::string, std::map<std::string, double>> slices;

    nlohmann::json to_json() const;
    /// Two-column "metric\tvalue" table followed by per-leaf and slice blocks.
    std::string to_tsv() const;
};

/// Builds a report for `metrics`. When `router` is given, per-leaf values are added.
MetricsReport evaluate_report(const Predictor& model, const Dataset& test, std::span<const Metric> metrics,
                              const Tree* router = nullptr, const GroundTruth* truth = nullptr,
                              const MaeOptions& options = {});

/// Rows = models, columns = slices, plus "Avg." and "% Imp." (improvement of
/// each model's average over the first model's, in percent, lower is better).
std::string comparison_table(const std::vector<std::string>& models, const std::vector<std::string>& slices,
                             const std::vector<std::vector<double>>& values);

/// Shortest round-trip text for a real.
std::string format_real(double v);

} // namespace mst
