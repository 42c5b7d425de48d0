#include "mst/leaf_models.hpp"

#include "mst/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace mst {

std::string_view to_string(LeafFamily family) {
    switch (family) {
    case LeafFamily::mnl:
        return "mnl";
    case LeafFamily::mnl_option_specific:
        return "mnl-option-specific";
    case LeafFamily::isotonic:
        return "isotonic";
    case LeafFamily::logistic:
        return "logistic";
    case LeafFamily::constant:
        return "constant";
    }
    return "mnl";
}

LeafFamily parse_leaf_family(std::string_view name) {
    for (auto f : {LeafFamily::mnl, LeafFamily::mnl_option_specific, LeafFamily::isotonic, LeafFamily::logistic,
                   LeafFamily::constant}) {
        if (to_string(f) == name) {
            return f;
        }
    }
    throw Error("unknown leaf family '" + std::string(name) + "'");
}

PayloadKind payload_kind(LeafFamily family) {
    return family == LeafFamily::mnl || family == LeafFamily::mnl_option_specific ? PayloadKind::choice
                                                                                   : PayloadKind::auction;
}

// ---------------------------------------------------------------- MNL

MnlParams MnlParams::zeros(std::size_t option_dim, bool option_specific, std::size_t slots) {
    MnlParams p;
    p.option_specific = option_specific;
    p.option_dim = option_dim;
    p.slots = option_specific ? std::max<std::size_t>(slots, 1) : 1;
    p.beta.assign(p.slots * option_dim, 0.0);
    return p;
}

std::size_t MnlParams::slot_of(int option_id) const {
    if (!option_specific) {
        return 0;
    }
    if (option_id < 0 || static_cast<std::size_t>(option_id) >= slots) {
        throw Error("option id " + std::to_string(option_id) + " has no parameter row");
    }
    return static_cast<std::size_t>(option_id);
}

double MnlParams::utility(std::span<const double> features, int option_id) const {
    const double* b = beta.data() + slot_of(option_id) * option_dim;
    double u = 0.0;
    for (std::size_t c = 0; c < option_dim; ++c) {
        u += b[c] * features[c];
    }
    return u;
}

void mnl_predict_into(const MnlParams& params, std::span<const double> options, std::span<const int> option_ids,
                      std::vector<double>& out) {
    const std::size_t q = params.option_dim;
    if (q == 0 || options.empty() || options.size() % q != 0) {
        throw Error("mnl_predict: option features do not match parameter dimension");
    }
    const std::size_t h = options.size() / q;
    if (params.option_specific && option_ids.size() != h) {
        throw Error("mnl_predict: option-specific model needs one id per option");
    }
    out.resize(h + 1);
    double top = 0.0;
    for (std::size_t k = 0; k < h; ++k) {
        const int id = option_ids.empty() ? static_cast<int>(k) : option_ids[k];
        out[k + 1] = params.utility(options.subspan(k * q, q), id);
        top = std::max(top, out[k + 1]);
    }
    out[0] = std::exp(-top);
    double denom = out[0];
    for (std::size_t k = 1; k <= h; ++k) {
        out[k] = std::exp(out[k] - top);
        denom += out[k];
    }
    for (double& v : out) {
        v /= denom;
    }
}

std::vector<double> mnl_predict(const MnlParams& params, std::span<const double> options,
                                std::span<const int> option_ids) {
    std::vector<double> out;
    mnl_predict_into(params, options, option_ids, out);
    return out;
}

MnlObjective::MnlObjective(const Dataset& data, std::span<const std::size_t> rows, bool option_specific,
                           std::size_t slots, double ridge)
    : data_(data), rows_(rows), option_specific_(option_specific), slots_(option_specific ? slots : 1),
      ridge_(ridge) {
    if (data.kind() != PayloadKind::choice) {
        throw Error("MNL models need choice data");
    }
}

double MnlObjective::accumulate_row(const Eigen::VectorXd& theta, std::size_t row, Eigen::VectorXd* gradient,
                                    Eigen::MatrixXd* hessian, std::vector<double>& scratch) const {
    const std::size_t q = data_.option_dim();
    const std::size_t h = data_.option_count(row);
    const auto feats = data_.options(row);
    const auto ids = data_.option_ids(row);
    scratch.resize(2 * h);
    double* util = scratch.data();
    double* offs = scratch.data() + h;

    double top = 0.0;
    for (std::size_t k = 0; k < h; ++k) {
        std::size_t slot = 0;
        if (option_specific_) {
            slot = static_cast<std::size_t>(ids[k]);
            if (slot >= slots_) {
                throw Error("option id outside parameter slots");
            }
        }
        offs[k] = static_cast<double>(slot * q);
        const double* p = feats.data() + k * q;
        const double* b = theta.data() + slot * q;
        double u = 0.0;
        for (std::size_t c = 0; c < q; ++c) {
            u += b[c] * p[c];
        }
        util[k] = u;
        top = std::max(top, u);
    }
    double denom = std::exp(-top);
    for (std::size_t k = 0; k < h; ++k) {
        denom += std::exp(util[k] - top);
    }
    const double lse = top + std::log(denom);
    const int y = data_.choice(row);
    const double loss = lse - (y > 0 ? util[y - 1] : 0.0);

    if (gradient != nullptr || hessian != nullptr) {
        // Reuse util[] for probabilities.
        for (std::size_t k = 0; k < h; ++k) {
            util[k] = std::exp(util[k] - lse);
        }
    }
    if (gradient != nullptr) {
        auto& g = *gradient;
        for (std::size_t k = 0; k < h; ++k) {
            const auto off = static_cast<Eigen::Index>(offs[k]);
            const double* p = feats.data() + k * q;
            for (std::size_t c = 0; c < q; ++c) {
                g[off + static_cast<Eigen::Index>(c)] += util[k] * p[c];
            }
        }
        if (y > 0) {
            const auto off = static_cast<Eigen::Index>(offs[y - 1]);
            const double* p = feats.data() + static_cast<std::size_t>(y - 1) * q;
            for (std::size_t c = 0; c < q; ++c) {
                g[off + static_cast<Eigen::Index>(c)] -= p[c];
            }
        }
    }
    if (hessian != nullptr) {
        auto& hs = *hessian;
        for (std::size_t k = 0; k < h; ++k) {
            const auto off = static_cast<Eigen::Index>(offs[k]);
            const double* p = feats.data() + k * q;
            for (std::size_t a = 0; a < q; ++a) {
                const double pa = util[k] * p[a];
                for (std::size_t b = 0; b < q; ++b) {
                    hs(off + static_cast<Eigen::Index>(a), off + static_cast<Eigen::Index>(b)) += pa * p[b];
                }
            }
        }
        if (!option_specific_) {
            double mu[64];
            double* m = q <= 64 ? mu : nullptr;
            std::vector<double> big;
            if (m == nullptr) {
                big.resize(q);
                m = big.data();
            }
            std::fill(m, m + q, 0.0);
            for (std::size_t k = 0; k < h; ++k) {
                const double* p = feats.data() + k * q;
                for (std::size_t c = 0; c < q; ++c) {
                    m[c] += util[k] * p[c];
                }
            }
            for (std::size_t a = 0; a < q; ++a) {
                for (std::size_t b = 0; b < q; ++b) {
                    hs(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) -= m[a] * m[b];
                }
            }
        } else {
            for (std::size_t k = 0; k < h; ++k) {
                const auto off_k = static_cast<Eigen::Index>(offs[k]);
                const double* pk = feats.data() + k * q;
                for (std::size_t l = 0; l < h; ++l) {
                    const auto off_l = static_cast<Eigen::Index>(offs[l]);
                    const double* pl = feats.data() + l * q;
                    const double w = util[k] * util[l];
                    for (std::size_t a = 0; a < q; ++a) {
                        for (std::size_t b = 0; b < q; ++b) {
                            hs(off_k + static_cast<Eigen::Index>(a), off_l + static_cast<Eigen::Index>(b)) -=
                                w * pk[a] * pl[b];
                        }
                    }
                }
            }
        }
    }
    return loss;
}

double MnlObjective::evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* gradient,
                              Eigen::MatrixXd* hessian) const {
    const auto dim = static_cast<Eigen::Index>(dimension());
    if (gradient != nullptr) {
        gradient->setZero(dim);
    }
    if (hessian != nullptr) {
        hessian->setZero(dim, dim);
    }
    std::vector<double> scratch;
    double total = 0.0;
    for (std::size_t r : rows_) {
        total += accumulate_row(theta, r, gradient, hessian, scratch);
    }
    total += 0.5 * ridge_ * theta.squaredNorm();
    if (gradient != nullptr) {
        *gradient += ridge_ * theta;
    }
    if (hessian != nullptr) {
        hessian->diagonal().array() += ridge_;
    }
    return total;
}

void MnlObjective::batch_gradient(const Eigen::VectorXd& theta, std::span<const std::size_t> samples,
                                  Eigen::VectorXd& gradient) const {
    gradient.setZero(static_cast<Eigen::Index>(dimension()));
    std::vector<double> scratch;
    for (std::size_t s : samples) {
        accumulate_row(theta, rows_[s], &gradient, nullptr, scratch);
    }
    gradient /= static_cast<double>(std::max<std::size_t>(samples.size(), 1));
    gradient += (ridge_ / static_cast<double>(rows_.size())) * theta;
}

double mnl_loss(const MnlParams& params, const Dataset& data, std::span<const std::size_t> rows) {
    double total = 0.0;
    std::vector<double> probs;
    for (std::size_t r : rows) {
        // -log P(y) = lse - u_y, computed directly to avoid log(0).
        const std::size_t q = params.option_dim;
        const auto feats = data.options(r);
        const auto ids = data.option_ids(r);
        const std::size_t h = data.option_count(r);
        probs.resize(h);
        double top = 0.0;
        for (std::size_t k = 0; k < h; ++k) {
            probs[k] = params.utility(feats.subspan(k * q, q), ids[k]);
            top = std::max(top, probs[k]);
        }
        double denom = std::exp(-top);
        for (std::size_t k = 0; k < h; ++k) {
            denom += std::exp(probs[k] - top);
        }
        const int y = data.choice(r);
        total += top + std::log(denom) - (y > 0 ? probs[y - 1] : 0.0);
    }
    return total;
}

MnlFit mnl_fit(const Dataset& data, std::span<const std::size_t> rows, const FitConfig& cfg, bool option_specific) {
    cfg.validate();
    if (rows.empty()) {
        throw Error("mnl_fit needs at least one row");
    }
    const std::size_t slots = option_specific ? std::max<std::size_t>(data.option_slots(), 1) : 1;
    MnlObjective objective(data, rows, option_specific, slots, cfg.l2_ridge);
    const auto dim = static_cast<Eigen::Index>(objective.dimension());
    Eigen::VectorXd start = Eigen::VectorXd::Zero(dim);
    if (!cfg.warm_start.empty()) {
        if (static_cast<Eigen::Index>(cfg.warm_start.size()) != dim) {
            throw Error("warm start has " + std::to_string(cfg.warm_start.size()) + " parameters, model needs " +
                        std::to_string(dim));
        }
        start = Eigen::Map<const Eigen::VectorXd>(cfg.warm_start.data(), dim);
    }
    const auto res = minimize(objective, start, cfg);
    MnlFit fit;
    fit.params = MnlParams::zeros(data.option_dim(), option_specific, slots);
    for (Eigen::Index i = 0; i < dim; ++i) {
        if (!std::isfinite(res.theta[i])) {
            throw Error("mnl_fit diverged to non-finite coefficients");
        }
        fit.params.beta[static_cast<std::size_t>(i)] = res.theta[i];
    }
    fit.report.converged = res.converged;
    fit.report.iterations = res.iterations;
    fit.report.gradient_norm = res.gradient_norm;
    fit.report.loss = mnl_loss(fit.params, data, rows);
    return fit;
}

// ---------------------------------------------------------------- isotonic

double IsotonicCurve::operator()(double bid) const {
    if (levels.empty()) {
        throw Error("isotonic curve is empty");
    }
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), bid);
    if (it == breakpoints.begin()) {
        return levels.front();
    }
    return levels[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

IsotonicCurve IsotonicCurve::compressed() const {
    IsotonicCurve out;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (i == 0 || levels[i] != out.levels.back()) {
            out.breakpoints.push_back(breakpoints[i]);
            out.levels.push_back(levels[i]);
        }
    }
    return out;
}

double isotonic_predict(const IsotonicCurve& curve, double bid) {
    return curve(bid);
}

namespace {

struct Block {
    double sum = 0.0;
    double weight = 0.0;
    std::size_t points = 0; // distinct abscissae pooled into the block
};

/// PAVA on abscissae sorted ascending; equal abscissae are pooled first.
IsotonicCurve pava_sorted(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    std::vector<double> xs;
    std::vector<Block> pooled;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double wi = w.empty() ? 1.0 : w[i];
        if (!xs.empty() && x[i] == xs.back()) {
            pooled.back().sum += wi * y[i];
            pooled.back().weight += wi;
        } else {
            xs.push_back(x[i]);
            pooled.push_back({wi * y[i], wi, 1});
        }
    }
    std::vector<Block> stack;
    stack.reserve(pooled.size());
    for (const auto& b : pooled) {
        stack.push_back(b);
        while (stack.size() > 1) {
            const auto& cur = stack[stack.size() - 1];
            const auto& prev = stack[stack.size() - 2];
            // prev.mean > cur.mean, cross-multiplied (weights are positive).
            if (prev.sum * cur.weight <= cur.sum * prev.weight) {
                break;
            }
            Block merged{prev.sum + cur.sum, prev.weight + cur.weight, prev.points + cur.points};
            stack.pop_back();
            stack.back() = merged;
        }
    }
    IsotonicCurve curve;
    curve.breakpoints = std::move(xs);
    curve.levels.reserve(curve.breakpoints.size());
    for (const auto& b : stack) {
        const double level = std::clamp(b.sum / b.weight, 0.0, 1.0);
        curve.levels.insert(curve.levels.end(), b.points, level);
    }
    return curve;
}

void check_isotonic_inputs(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    if (x.empty()) {
        throw Error("isotonic_fit needs at least one pair");
    }
    if (x.size() != y.size() || (!w.empty() && w.size() != x.size())) {
        throw Error("isotonic_fit: input lengths differ");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) {
            throw Error("isotonic_fit: non-finite abscissa");
        }
        if (!(y[i] >= 0.0 && y[i] <= 1.0)) {
            throw Error("isotonic_fit: outcomes must lie in [0, 1]");
        }
        if (!w.empty() && !(w[i] > 0.0 && std::isfinite(w[i]))) {
            throw Error("isotonic_fit: weights must be positive");
        }
    }
}

} // namespace

IsotonicCurve isotonic_fit(std::span<const double> x, std::span<const double> y, std::span<const double> weights) {
    check_isotonic_inputs(x, y, weights);
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> xs(x.size());
    std::vector<double> ys(x.size());
    std::vector<double> ws;
    for (std::size_t i = 0; i < order.size(); ++i) {
        xs[i] = x[order[i]];
        ys[i] = y[order[i]];
    }
    if (!weights.empty()) {
        ws.resize(x.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            ws[i] = weights[order[i]];
        }
    }
    return pava_sorted(xs, ys, ws);
}

// ---------------------------------------------------------------- logistic / constant

namespace {

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

} // namespace

double logistic_predict(const LogisticParams& params, double bid) {
    return sigmoid(params.slope * bid + params.intercept);
}

LogisticObjective::LogisticObjective(const Dataset& data, std::span<const std::size_t> rows, double ridge)
    : data_(data), rows_(rows), ridge_(ridge) {
    if (data.kind() != PayloadKind::auction) {
        throw Error("logistic models need auction data");
    }
}

double LogisticObjective::evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* gradient,
                                   Eigen::MatrixXd* hessian) const {
    double total = 0.0;
    double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
    for (std::size_t r : rows_) {
        const double b = data_.bid(r);
        const double y = data_.win(r);
        const double z = theta[0] * b + theta[1];
        total += softplus(z) - y * z;
        if (gradient != nullptr || hessian != nullptr) {
            const double s = sigmoid(z);
            g0 += (s - y) * b;
            g1 += s - y;
            const double v = s * (1.0 - s);
            h00 += v * b * b;
            h01 += v * b;
            h11 += v;
        }
    }
    total += 0.5 * ridge_ * theta.squaredNorm();
    if (gradient != nullptr) {
        gradient->resize(2);
        (*gradient)[0] = g0 + ridge_ * theta[0];
        (*gradient)[1] = g1 + ridge_ * theta[1];
    }
    if (hessian != nullptr) {
        hessian->resize(2, 2);
        (*hessian)(0, 0) = h00 + ridge_;
        (*hessian)(0, 1) = h01;
        (*hessian)(1, 0) = h01;
        (*hessian)(1, 1) = h11 + ridge_;
    }
    return total;
}

void LogisticObjective::batch_gradient(const Eigen::VectorXd& theta, std::span<const std::size_t> samples,
                                       Eigen::VectorXd& gradient) const {
    gradient.setZero(2);
    for (std::size_t s : samples) {
        const std::size_t r = rows_[s];
        const double b = data_.bid(r);
        const double e = sigmoid(theta[0] * b + theta[1]) - data_.win(r);
        gradient[0] += e * b;
        gradient[1] += e;
    }
    gradient /= static_cast<double>(std::max<std::size_t>(samples.size(), 1));
    gradient += (ridge_ / static_cast<double>(rows_.size())) * theta;
}

LogisticFit logistic_fit(const Dataset& data, std::span<const std::size_t> rows, const FitConfig& cfg) {
    cfg.validate();
    if (rows.empty()) {
        throw Error("logistic_fit needs at least one row");
    }
    LogisticObjective objective(data, rows, cfg.l2_ridge);
    Eigen::VectorXd start = Eigen::VectorXd::Zero(2);
    if (!cfg.warm_start.empty()) {
        if (cfg.warm_start.size() != 2) {
            throw Error("logistic warm start needs 2 parameters");
        }
        start << cfg.warm_start[0], cfg.warm_start[1];
    }
    const auto res = minimize(objective, start, cfg);
    if (!res.theta.allFinite()) {
        throw Error("logistic_fit diverged to non-finite coefficients");
    }
    LogisticFit fit;
    fit.params = {res.theta[0], res.theta[1]};
    fit.report.converged = res.converged;
    fit.report.iterations = res.iterations;
    fit.report.gradient_norm = res.gradient_norm;
    double loss = 0.0;
    for (std::size_t r : rows) {
        const double e = data.win(r) - logistic_predict(fit.params, data.bid(r));
        loss += e * e;
    }
    fit.report.loss = loss;
    return fit;
}

double constant_fit(std::span<const double> outcomes) {
    if (outcomes.empty()) {
        throw Error("constant_fit needs at least one outcome");
    }
    double s = 0.0;
    for (double v : outcomes) {
        s += v;
    }
    return s / static_cast<double>(outcomes.size());
}

double constant_fit(const Dataset& data, std::span<const std::size_t> rows) {
    if (rows.empty()) {
        throw Error("constant_fit needs at least one outcome");
    }
    double s = 0.0;
    for (std::size_t r : rows) {
        s += data.win(r);
    }
    return s / static_cast<double>(rows.size());
}

// ---------------------------------------------------------------- LeafModel

LeafModel::LeafModel(MnlParams params) : payload_(std::move(params)) {}
LeafModel::LeafModel(IsotonicCurve curve) : payload_(std::move(curve)) {}
LeafModel::LeafModel(LogisticParams params) : payload_(params) {}
LeafModel::LeafModel(ConstantParams params) : payload_(params) {}

LeafFamily LeafModel::family() const {
    switch (payload_.index()) {
    case 0:
        return std::get<MnlParams>(payload_).option_specific ? LeafFamily::mnl_option_specific : LeafFamily::mnl;
    case 1:
        return LeafFamily::isotonic;
    case 2:
        return LeafFamily::logistic;
    default:
        return LeafFamily::constant;
    }
}

double LeafModel::win_probability(double bid) const {
    switch (payload_.index()) {
    case 1:
        return std::get<IsotonicCurve>(payload_)(bid);
    case 2:
        return logistic_predict(std::get<LogisticParams>(payload_), bid);
    case 3:
        return std::get<ConstantParams>(payload_).probability;
    default:
        throw Error("MNL models do not predict win probabilities");
    }
}

double LeafModel::row_loss(const Dataset& data, std::size_t row) const {
    if (data.kind() != payload_kind(family())) {
        throw Error("leaf model family does not match the data payload");
    }
    if (const auto* mnl = std::get_if<MnlParams>(&payload_)) {
        const std::size_t r[1] = {row};
        return mnl_loss(*mnl, data, r);
    }
    const double e = data.win(row) - win_probability(data.bid(row));
    return e * e;
}

double LeafModel::loss(const Dataset& data, std::span<const std::size_t> rows) const {
    if (data.kind() != payload_kind(family())) {
        throw Error("leaf model family does not match the data payload");
    }
    if (const auto* mnl = std::get_if<MnlParams>(&payload_)) {
        return mnl_loss(*mnl, data, rows);
    }
    double total = 0.0;
    for (std::size_t r : rows) {
        const double e = data.win(r) - win_probability(data.bid(r));
        total += e * e;
    }
    return total;
}

void LeafModel::predict(const Dataset& data, std::size_t row, std::vector<double>& out) const {
    if (data.kind() != payload_kind(family())) {
        throw Error("leaf model family does not match the data payload");
    }
    if (const auto* mnl = std::get_if<MnlParams>(&payload_)) {
        mnl_predict_into(*mnl, data.options(row), data.option_ids(row), out);
        return;
    }
    out.assign(1, win_probability(data.bid(row)));
}

std::vector<double> LeafModel::parameters() const {
    switch (payload_.index()) {
    case 0:
        return std::get<MnlParams>(payload_).beta;
    case 2: {
        const auto& p = std::get<LogisticParams>(payload_);
        return {p.slope, p.intercept};
    }
    default:
        return {};
    }
}

std::string LeafModel::summary() const {
    std::ostringstream os;
    os << std::setprecision(4);
    switch (payload_.index()) {
    case 0: {
        const auto& p = std::get<MnlParams>(payload_);
        os << (p.option_specific ? "MNL(option-specific, " + std::to_string(p.slots) + " slots) beta=[" : "MNL beta=[");
        for (std::size_t i = 0; i < p.beta.size(); ++i) {
            os << (i ? ", " : "") << p.beta[i];
        }
        os << "]";
        break;
    }
    case 1: {
        const auto& c = std::get<IsotonicCurve>(payload_);
        os << "Isotonic " << c.levels.size() << " steps";
        if (!c.levels.empty()) {
            os << " range=[" << c.levels.front() << ", " << c.levels.back() << "]";
        }
        break;
    }
    case 2: {
        const auto& p = std::get<LogisticParams>(payload_);
        os << "Logistic slope=" << p.slope << " intercept=" << p.intercept;
        break;
    }
    default:
        os << "Constant p=" << std::get<ConstantParams>(payload_).probability;
    }
    return os.str();
}

namespace {

bool sorted_by_bid(const Dataset& data, std::span<const std::size_t> rows) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (data.bid(rows[i]) < data.bid(rows[i - 1])) {
            return false;
        }
    }
    return true;
}

LeafFit fit_isotonic_leaf(const Dataset& data, std::span<const std::size_t> rows) {
    if (rows.empty()) {
        throw Error("isotonic_fit needs at least one pair");
    }
    std::vector<std::size_t> order(rows.begin(), rows.end());
    if (!sorted_by_bid(data, rows)) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return data.bid(a) < data.bid(b); });
    }
    std::vector<double> xs(order.size());
    std::vector<double> ys(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        xs[i] = data.bid(order[i]);
        ys[i] = data.win(order[i]);
    }
    const IsotonicCurve full = pava_sorted(xs, ys, {});
    // Exact residual sum: walk sorted points against their distinct-abscissa level.
    double sse = 0.0;
    std::size_t level = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0 && xs[i] != xs[i - 1]) {
            ++level;
        }
        const double e = ys[i] - full.levels[level];
        sse += e * e;
    }
    LeafFit fit{LeafModel(full.compressed()), {}};
    fit.report.converged = true;
    fit.report.loss = sse;
    return fit;
}

} // namespace

LeafFit fit_leaf(LeafFamily family, const Dataset& data, std::span<const std::size_t> rows, const FitConfig& cfg,
                 const LeafModel* warm) {
    if (data.kind() != payload_kind(family)) {
        throw Error(std::string("leaf family '") + std::string(to_string(family)) + "' does not match the data payload");
    }
    if (rows.empty()) {
        throw Error("cannot fit a leaf model on zero rows");
    }
    FitConfig local = cfg;
    if (warm != nullptr && warm->family() == family) {
        local.warm_start = warm->parameters();
    }
    switch (family) {
    case LeafFamily::mnl:
    case LeafFamily::mnl_option_specific: {
        auto fit = mnl_fit(data, rows, local, family == LeafFamily::mnl_option_specific);
        return {LeafModel(std::move(fit.params)), fit.report};
    }
    case LeafFamily::logistic: {
        auto fit = logistic_fit(data, rows, local);
        return {LeafModel(fit.params), fit.report};
    }
    case LeafFamily::isotonic:
        return fit_isotonic_leaf(data, rows);
    case LeafFamily::constant: {
        const double p = constant_fit(data, rows);
        LeafFit fit{LeafModel(ConstantParams{p}), {}};
        fit.report.converged = true;
        double sse = 0.0;
        for (std::size_t r : rows) {
            const double e = data.win(r) - p;
            sse += e * e;
        }
        fit.report.loss = sse;
        return fit;
    }
    }
    throw Error("unsupported leaf family");
}

} // namespace mst
