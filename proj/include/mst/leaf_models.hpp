#pragma once

#include "mst/dataset.hpp"
#include "mst/optimize.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mst {

enum class LeafFamily { mnl, mnl_option_specific, isotonic, logistic, constant };

std::string_view to_string(LeafFamily family);
LeafFamily parse_leaf_family(std::string_view name);
/// Payload kind a family consumes (choice for the MNL variants, auction otherwise).
PayloadKind payload_kind(LeafFamily family);

// ---------------------------------------------------------------- MNL

/// Multinomial logit coefficients. The utility of option h is beta_slot . p_h,
/// with slot 0 for the shared variant and slot = option id for the
/// option-specific variant. The no-purchase utility is fixed at zero.
struct MnlParams {
    bool option_specific = false;
    std::size_t option_dim = 0;
    std::size_t slots = 1;
    std::vector<double> beta;

    static MnlParams zeros(std::size_t option_dim, bool option_specific = false, std::size_t slots = 1);

    std::size_t parameter_count() const { return slots * option_dim; }
    std::size_t slot_of(int option_id) const;
    double utility(std::span<const double> features, int option_id) const;

    bool operator==(const MnlParams&) const = default;
};

/// Choice probabilities [no-purchase, option 1, ..., option H] via log-sum-exp.
std::vector<double> mnl_predict(const MnlParams& params, std::span<const double> options,
                                std::span<const int> option_ids = {});
void mnl_predict_into(const MnlParams& params, std::span<const double> options, std::span<const int> option_ids,
                      std::vector<double>& out);

/// Penalized negative log-likelihood over `rows` with optional gradient/Hessian.
class MnlObjective final : public SmoothObjective {
public:
    MnlObjective(const Dataset& data, std::span<const std::size_t> rows, bool option_specific, std::size_t slots,
                 double ridge);

    std::size_t dimension() const override { return slots_ * data_.option_dim(); }
    std::size_t sample_count() const override { return rows_.size(); }
    double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* gradient,
                    Eigen::MatrixXd* hessian) const override;
    void batch_gradient(const Eigen::VectorXd& theta, std::span<const std::size_t> samples,
                        Eigen::VectorXd& gradient) const override;

private:
    double accumulate_row(const Eigen::VectorXd& theta, std::size_t row, Eigen::VectorXd* gradient,
                          Eigen::MatrixXd* hessian, std::vector<double>& scratch) const;

    const Dataset& data_;
    std::span<const std::size_t> rows_;
    bool option_specific_;
    std::size_t slots_;
    double ridge_;
};

struct MnlFit {
    MnlParams params;
    FitReport report;
};

/// Ridge-regularized maximum likelihood over `rows`. For the option-specific
/// variant the slot count is taken from the whole dataset so that parameter
/// blocks of parent and child nodes line up.
MnlFit mnl_fit(const Dataset& data, std::span<const std::size_t> rows, const FitConfig& cfg,
               bool option_specific = false);
/// Sum of -log f(y_i | p_i), no ridge.
double mnl_loss(const MnlParams& params, const Dataset& data, std::span<const std::size_t> rows);

// ---------------------------------------------------------------- isotonic

/// Nondecreasing step function: value at `bid` is the level of the largest
/// breakpoint <= bid; below the first breakpoint the first level applies.
struct IsotonicCurve {
    std::vector<double> breakpoints;
    std::vector<double> levels;

    double operator()(double bid) const;
    /// Drops breakpoints whose level equals the previous one; predictions are unchanged.
    IsotonicCurve compressed() const;

    bool operator==(const IsotonicCurve&) const = default;
};

/// Weighted least-squares isotonic fit by pool-adjacent-violators. Ties in x
/// are pooled (weighted average) first. `weights` may be empty (unit weights).
IsotonicCurve isotonic_fit(std::span<const double> x, std::span<const double> y,
                           std::span<const double> weights = {});
double isotonic_predict(const IsotonicCurve& curve, double bid);

// ---------------------------------------------------------------- logistic / constant

/// Win probability sigma(slope * bid + intercept).
struct LogisticParams {
    double slope = 0.0;
    double intercept = 0.0;

    bool operator==(const LogisticParams&) const = default;
};

double logistic_predict(const LogisticParams& params, double bid);

class LogisticObjective final : public SmoothObjective {
public:
    LogisticObjective(const Dataset& data, std::span<const std::size_t> rows, double ridge);

    std::size_t dimension() const override { return 2; }
    std::size_t sample_count() const override { return rows_.size(); }
    double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* gradient,
                    Eigen::MatrixXd* hessian) const override;
    void batch_gradient(const Eigen::VectorXd& theta, std::span<const std::size_t> samples,
                        Eigen::VectorXd& gradient) const override;

private:
    const Dataset& data_;
    std::span<const std::size_t> rows_;
    double ridge_;
};

struct LogisticFit {
    LogisticParams params;
    FitReport report;
};

LogisticFit logistic_fit(const Dataset& data, std::span<const std::size_t> rows, const FitConfig& cfg);

struct ConstantParams {
    double probability = 0.0;

    bool operator==(const ConstantParams&) const = default;
};

/// Mean outcome over `rows`.
double constant_fit(const Dataset& data, std::span<const std::size_t> rows);
double constant_fit(std::span<const double> outcomes);

// ---------------------------------------------------------------- LeafModel

/// A fitted response model f_l(y | p) of one of the supported families.
class LeafModel {
public:
    using Payload = std::variant<MnlParams, IsotonicCurve, LogisticParams, ConstantParams>;

    LeafModel() = default;
    explicit LeafModel(MnlParams params);
    explicit LeafModel(IsotonicCurve curve);
    explicit LeafModel(LogisticParams params);
    explicit LeafModel(ConstantParams params);

    LeafFamily family() const;
    const Payload& payload() const { return payload_; }

    /// Training-loss contribution of one row: -log f(y|p) for MNL, squared error otherwise.
    double row_loss(const Dataset& data, std::size_t row) const;
    /// Sum of row losses, no ridge.
    double loss(const Dataset& data, std::span<const std::size_t> rows) const;

    /// Choice rows: [P(no purchase), P(option 1), ...]. Auction rows: [P(win)].
    void predict(const Dataset& data, std::size_t row, std::vector<double>& out) const;
    double win_probability(double bid) const;

    /// Flat parameter vector used for warm starts (MNL beta, logistic [slope, intercept]).
    std::vector<double> parameters() const;
    std::string summary() const;

    bool operator==(const LeafModel&) const = default;

private:
    Payload payload_{ConstantParams{}};
};

struct LeafFit {
    LeafModel model;
    FitReport report;
};

/// Fits a model of `family` on `rows`. `warm`, when given and parametric,
/// seeds the optimizer; otherwise cfg.warm_start (if any) is used.
LeafFit fit_leaf(LeafFamily family, const Dataset& data, std::span<const std::size_t> rows, const FitConfig& cfg,
                 const LeafModel* warm = nullptr);

} // namespace mst
