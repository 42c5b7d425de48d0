#include "mst/optimize.hpp"

#include "mst/error.hpp"
#include "mst/rng.hpp"

#include <cmath>
#include <deque>
#include <numeric>

namespace mst {

namespace {

double scaled_norm(const Eigen::VectorXd& g, std::size_t n) {
    if (g.size() == 0) {
        return 0.0;
    }
    return g.cwiseAbs().maxCoeff() / static_cast<double>(std::max<std::size_t>(n, 1));
}

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-12;

} // namespace

std::string_view to_string(Optimizer o) {
    switch (o) {
    case Optimizer::sgd:
        return "sgd";
    case Optimizer::newton:
        return "newton";
    case Optimizer::lbfgs:
        return "lbfgs";
    }
    return "newton";
}

Optimizer parse_optimizer(std::string_view name) {
    if (name == "sgd") {
        return Optimizer::sgd;
    }
    if (name == "newton") {
        return Optimizer::newton;
    }
    if (name == "lbfgs") {
        return Optimizer::lbfgs;
    }
    throw Error("unknown optimizer '" + std::string(name) + "'");
}

void FitConfig::validate() const {
    if (!(gradient_tolerance > 0.0)) {
        throw Error("gradient_tolerance must be positive");
    }
    if (!(l2_ridge >= 0.0)) {
        throw Error("l2_ridge must be nonnegative");
    }
    if (max_iterations < 0) {
        throw Error("max_iterations must be nonnegative");
    }
    if (sgd_batch_size == 0 || !(sgd_step > 0.0)) {
        throw Error("sgd batch size and step must be positive");
    }
}

OptimizeResult minimize(const SmoothObjective& objective, const Eigen::VectorXd& start, const FitConfig& cfg) {
    switch (cfg.optimizer) {
    case Optimizer::sgd:
        return sgd_minimize(objective, start, cfg);
    case Optimizer::lbfgs:
        return lbfgs_minimize(objective, start, cfg);
    case Optimizer::newton:
        break;
    }
    return newton_minimize(objective, start, cfg);
}

OptimizeResult newton_minimize(const SmoothObjective& objective, const Eigen::VectorXd& start,
                               const FitConfig& cfg) {
    const std::size_t n = objective.sample_count();
    const auto dim = static_cast<Eigen::Index>(objective.dimension());
    OptimizeResult res;
    res.theta = start;
    Eigen::VectorXd grad(dim);
    Eigen::MatrixXd hess(dim, dim);
    double f = objective.evaluate(res.theta, &grad, &hess);
    Eigen::VectorXd trial_grad(dim);

    while (true) {
        res.gradient_norm = scaled_norm(grad, n);
        if (res.gradient_norm <= cfg.gradient_tolerance) {
            res.converged = true;
            break;
        }
        if (res.iterations >= cfg.max_iterations) {
            break;
        }

        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            step = -ldlt.solve(grad);
        }
        double slope = step.size() == dim ? grad.dot(step) : 0.0;
        if (step.size() != dim || !std::isfinite(slope) || slope >= 0.0) {
            // Hessian not usable: fall back to a damped system.
            const double damping = 1e-6 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
            Eigen::MatrixXd damped = hess + damping * Eigen::MatrixXd::Identity(dim, dim);
            step = -damped.ldlt().solve(grad);
            slope = grad.dot(step);
            if (!std::isfinite(slope) || slope >= 0.0) {
                step = -grad;
                slope = -grad.squaredNorm();
            }
        }

        double t = 1.0;
        bool accepted = false;
        while (t >= kMinStep) {
            Eigen::VectorXd trial = res.theta + t * step;
            const double ft = objective.evaluate(trial, &trial_grad, nullptr);
            // Near the optimum objective differences fall below rounding; a full
            // step that shrinks the gradient is accepted on that evidence alone.
            const bool armijo = std::isfinite(ft) && ft <= f + kArmijo * t * slope;
            const bool shrinks = t == 1.0 && std::isfinite(ft) && ft <= f + 1e-12 * std::abs(f) &&
                                 trial_grad.cwiseAbs().maxCoeff() < grad.cwiseAbs().maxCoeff();
            if (armijo || shrinks) {
                res.theta = std::move(trial);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        ++res.iterations;
        if (!accepted) {
            break;
        }
        f = objective.evaluate(res.theta, &grad, &hess);
    }
    res.objective = f;
    return res;
}

OptimizeResult lbfgs_minimize(const SmoothObjective& objective, const Eigen::VectorXd& start,
                              const FitConfig& cfg) {
    constexpr std::size_t kMemory = 10;
    const std::size_t n = objective.sample_count();
    const auto dim = static_cast<Eigen::Index>(objective.dimension());
    OptimizeResult res;
    res.theta = start;
    Eigen::VectorXd grad(dim);
    double f = objective.evaluate(res.theta, &grad, nullptr);
    std::deque<Eigen::VectorXd> s_hist;
    std::deque<Eigen::VectorXd> y_hist;

    while (true) {
        res.gradient_norm = scaled_norm(grad, n);
        if (res.gradient_norm <= cfg.gradient_tolerance) {
            res.converged = true;
            break;
        }
        if (res.iterations >= cfg.max_iterations) {
            break;
        }

        // Two-loop recursion.
        Eigen::VectorXd q = grad;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
            alpha[i] = rho * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        double gamma = 1.0 / std::max(1.0, static_cast<double>(n));
        if (!s_hist.empty()) {
            gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        }
        Eigen::VectorXd r = gamma * q;
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double rho = 1.0 / y_hist[i].dot(s_hist[i]);
            const double beta = rho * y_hist[i].dot(r);
            r += s_hist[i] * (alpha[i] - beta);
        }
        Eigen::VectorXd step = -r;
        double slope = grad.dot(step);
        if (!std::isfinite(slope) || slope >= 0.0) {
            s_hist.clear();
            y_hist.clear();
            step = -gamma * grad;
            slope = grad.dot(step);
        }

        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd trial_grad(dim);
        Eigen::VectorXd trial;
        double ft = f;
        while (t >= kMinStep) {
            trial = res.theta + t * step;
            ft = objective.evaluate(trial, &trial_grad, nullptr);
            if (std::isfinite(ft) && ft <= f + kArmijo * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        ++res.iterations;
        if (!accepted) {
            break;
        }
        Eigen::VectorXd s = trial - res.theta;
        Eigen::VectorXd y = trial_grad - grad;
        if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            if (s_hist.size() > kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
            }
        }
        res.theta = std::move(trial);
        grad = std::move(trial_grad);
        f = ft;
    }
    res.objective = f;
    return res;
}

/// One iteration is one epoch of minibatch updates followed by a full-gradient
/// convergence check.
OptimizeResult sgd_minimize(const SmoothObjective& objective, const Eigen::VectorXd& start,
                            const FitConfig& cfg) {
    const std::size_t n = objective.sample_count();
    const auto dim = static_cast<Eigen::Index>(objective.dimension());
    OptimizeResult res;
    res.theta = start;
    Eigen::VectorXd grad(dim);
    double f = objective.evaluate(res.theta, &grad, nullptr);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Eigen::VectorXd batch_grad(dim);
    CounterRng rng(cfg.seed, 0x5d6);
    std::size_t updates = 0;

    while (true) {
        res.gradient_norm = scaled_norm(grad, n);
        if (res.gradient_norm <= cfg.gradient_tolerance) {
            res.converged = true;
            break;
        }
        if (res.iterations >= cfg.max_iterations) {
            break;
        }
        shuffle(order, rng);
        for (std::size_t begin = 0; begin < n; begin += cfg.sgd_batch_size) {
            const std::size_t end = std::min(n, begin + cfg.sgd_batch_size);
            objective.batch_gradient(res.theta, std::span(order).subspan(begin, end - begin), batch_grad);
            ++updates;
            res.theta -= (cfg.sgd_step / std::sqrt(static_cast<double>(updates))) * batch_grad;
        }
        ++res.iterations;
        f = objective.evaluate(res.theta, &grad, nullptr);
    }
    res.objective = f;
    return res;
}

} // namespace mst
