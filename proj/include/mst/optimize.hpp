#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mst {

enum class Optimizer { sgd, newton, lbfgs };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view name);

/// Settings for fitting a parametric response model.
struct FitConfig {
    Optimizer optimizer = Optimizer::newton;
    int max_iterations = 100;
    /// Convergence when the infinity norm of the mean (per-row) gradient of the
    /// penalized objective drops to this value.
    double gradient_tolerance = 1e-8;
    /// Ridge weight: the objective is sum loss + (l2_ridge / 2) * |theta|^2.
    double l2_ridge = 1e-6;
    /// Initial parameters; empty means cold start at zero.
    std::vector<double> warm_start;
    std::size_t sgd_batch_size = 256;
    /// SGD step at update t is sgd_step / sqrt(t).
    double sgd_step = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Outcome of one model fit. `loss` is the unpenalized training loss (sum).
struct FitReport {
    bool converged = false;
    int iterations = 0;
    double loss = 0.0;
    double gradient_norm = 0.0;
};

/// Penalized empirical-risk objective over `sample_count()` rows.
class SmoothObjective {
public:
    virtual ~SmoothObjective() = default;

    virtual std::size_t dimension() const = 0;
    virtual std::size_t sample_count() const = 0;

    /// Penalized sum loss at theta. Fills the gradient and Hessian when non-null.
    virtual double evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* gradient,
                            Eigen::MatrixXd* hessian) const = 0;

    /// Penalized gradient of the mean loss over the listed sample positions.
    virtual void batch_gradient(const Eigen::VectorXd& theta, std::span<const std::size_t> samples,
                                Eigen::VectorXd& gradient) const = 0;
};

struct OptimizeResult {
    Eigen::VectorXd theta;
    double objective = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

OptimizeResult minimize(const SmoothObjective& objective, const Eigen::VectorXd& start, const FitConfig& cfg);

OptimizeResult newton_minimize(const SmoothObjective& objective, const Eigen::VectorXd& start,
                               const FitConfig& cfg);
OptimizeResult lbfgs_minimize(const SmoothObjective& objective, const Eigen::VectorXd& start,
                              const FitConfig& cfg);
OptimizeResult sgd_minimize(const SmoothObjective& objective, const Eigen::VectorXd& start,
                            const FitConfig& cfg);

} // namespace mst
