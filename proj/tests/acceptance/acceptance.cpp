// Acceptance run: prints one PASS/FAIL line per criterion (1-8).
// Usage: acceptance [criterion ...]   (default: all)

#include "mst/benchmarks.hpp"
#include "mst/datagen.hpp"
#include "mst/leaf_models.hpp"
#include "mst/metrics.hpp"
#include "mst/pruner.hpp"
#include "mst/rng.hpp"
#include "mst/serialization.hpp"
#include "mst/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

using namespace mst;

namespace {

// Pinned tolerances.
constexpr std::size_t kRows = 25000;          // per split (train / validation / test)
constexpr int kSeeds = 10;
constexpr int kDepth = 5;
constexpr int kWorkers = 8;
constexpr std::size_t kMnlkmKmax = 32;
constexpr double kCfMae = 0.005;
constexpr double kCmtMae = 0.01;
constexpr double kCmtRatio = 3.0;
constexpr double kKmeansRatio = 1.5;
constexpr int kAuctionSeeds = 5;
constexpr std::size_t kAuctionSegments = 8;
constexpr std::size_t kAuctionTrain = 1000000;
constexpr std::size_t kAuctionHoldout = 250000;
constexpr std::size_t kAuctionKmax = 32;
constexpr double kAuctionMargin = 0.01;
constexpr double kPavaTol = 1e-9;
constexpr double kGradTol = 1e-5;
constexpr double kGridTol = 1e-4;
constexpr double kParallelTol = 1e-9;
constexpr double kWarmLossTol = 1e-4;
constexpr double kPruneTol = 1e-12;

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t) {
    return std::chrono::duration<double>(clock_type::now() - t).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};


void report(int criterion, const std::string& name, const Outcome& o) {
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", criterion, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Split3 {
    Dataset train, validation, test;
};

Split3 split3(const Dataset& all, std::size_t train, std::size_t holdout) {
    return {all.slice(0, train), all.slice(train, train + holdout), all.slice(train + holdout, train + 2 * holdout)};
}

TrainConfig tree_config(LeafFamily family, std::uint64_t seed) {
    TrainConfig c;
    c.family = family;
    c.max_depth = kDepth;
    c.worker_count = kWorkers;
    c.seed = seed;
    return c;
}

double mean_family_loss(const Tree& tree, const Dataset& data) {
    return tree_loss(tree, data) / static_cast<double>(data.size());
}

// Criterion 8 bookkeeping, fed by criteria 1-3.
struct PruneAudit {
    std::size_t trees = 0;
    std::size_t violations = 0;
    double worst_gap = -std::numeric_limits<double>::infinity();

    void check(const Tree& full, const Tree& pruned, const Dataset& validation) {
        ++trees;
        const double gap = mean_family_loss(pruned, validation) - mean_family_loss(full, validation);
        worst_gap = std::max(worst_gap, gap);
        const bool ok = gap <= kPruneTol && is_structural_subtree(pruned, full) &&
                        prune(pruned, validation) == pruned;
        violations += ok ? 0 : 1;
    }
} audit;

struct TreeRun {
    Tree full;
    Tree pruned;
};

TreeRun grow_and_prune(const Split3& s, LeafFamily family, std::uint64_t seed) {
    auto grown = grow(s.train, tree_config(family, seed));
    auto pruned = prune(grown.tree, s.validation);
    audit.check(grown.tree, pruned, s.validation);
    return {std::move(grown.tree), std::move(pruned)};
}

TuneResult tune_mnlkm(const Split3& s, std::uint64_t seed) {
    return tune_k(s.train, s.validation, kMnlkmKmax, LeafFamily::mnl, FitConfig{}, seed, KMeansConfig{}, kWorkers);
}

double mae_np(const Predictor& m, const GroundTruth& t, const Dataset& test) {
    MaeOptions o;
    o.include_no_purchase = true;
    return mae_vs_truth(m, t, test, o);
}

// ---------------------------------------------------------------- 1
Outcome criterion1() {
    int depth0 = 0;
    int k1 = 0;
    double worst_mae = 0.0;
    double worst_np = 0.0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto t0 = clock_type::now();
        const auto g = gen_context_free(static_cast<std::uint64_t>(seed), 3 * kRows);
        const auto s = split3(g.data, kRows, kRows);
        const auto run = grow_and_prune(s, LeafFamily::mnl, static_cast<std::uint64_t>(seed));
        const double mae = mae_vs_truth(run.pruned, g.truth, s.test);
        worst_mae = std::max(worst_mae, mae);
        worst_np = std::max(worst_np, mae_np(run.pruned, g.truth, s.test));
        depth0 += run.pruned.depth() == 0;
        const auto km = tune_mnlkm(s, static_cast<std::uint64_t>(seed));
        k1 += km.selected_k == 1;
        std::printf("  [1] seed %d: grown leaves %zu, pruned depth %d, MAE %.5f, tune_k K=%zu (%.1fs)\n", seed,
                    run.full.leaf_count(), run.pruned.depth(), mae, km.selected_k, seconds_since(t0));
        std::fflush(stdout);
    }
    Outcome o;
    o.pass = depth0 >= 9 && worst_mae <= kCfMae && k1 >= 9;
    o.detail = "pruned depth 0 in " + std::to_string(depth0) + "/10 (need >= 9), max MAE " +
               fmt("%.5f", worst_mae) + " (<= " + fmt("%g", kCfMae) + "; with no-purchase " +
               fmt("%.5f", worst_np) + "), tune_k K=1 in " + std::to_string(k1) + "/10 (need >= 9)";
    return o;
}

// ---------------------------------------------------------------- 2 / 3
struct Comparison {
    double tree = 0.0, tree_full = 0.0, tree_np = 0.0;
    double km = 0.0, km_np = 0.0;
};

Comparison compare_tree_mnlkm(const std::function<Generated(std::uint64_t, std::size_t)>& gen, int criterion) {
    Comparison c;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto t0 = clock_type::now();
        const auto g = gen(static_cast<std::uint64_t>(seed), 3 * kRows);
        const auto s = split3(g.data, kRows, kRows);
        const auto run = grow_and_prune(s, LeafFamily::mnl, static_cast<std::uint64_t>(seed));
        const auto km = tune_mnlkm(s, static_cast<std::uint64_t>(seed));
        const double mt = mae_vs_truth(run.pruned, g.truth, s.test);
        const double mk = mae_vs_truth(km.model, g.truth, s.test);
        c.tree += mt / kSeeds;
        c.tree_full += mae_vs_truth(run.full, g.truth, s.test) / kSeeds;
        c.tree_np += mae_np(run.pruned, g.truth, s.test) / kSeeds;
        c.km += mk / kSeeds;
        c.km_np += mae_np(km.model, g.truth, s.test) / kSeeds;
        std::printf("  [%d] seed %d: CMT leaves %zu (pruned %zu) MAE %.5f, MNLKM K=%zu MAE %.5f (%.1fs)\n", criterion,
                    seed, run.full.leaf_count(), run.pruned.leaf_count(), mt, km.selected_k, mk, seconds_since(t0));
        std::fflush(stdout);
    }
    return c;
}

Outcome criterion2() {
    const auto c = compare_tree_mnlkm([](std::uint64_t s, std::size_t n) { return gen_cmt_truth(s, n); }, 2);
    Outcome o;
    const double ratio = c.km / c.tree;
    o.pass = c.tree <= kCmtMae && ratio >= kCmtRatio;
    o.detail = "mean CMT MAE " + fmt("%.5f", c.tree) + " (<= " + fmt("%g", kCmtMae) + "; unpruned " +
               fmt("%.5f", c.tree_full) + "), MNLKM/CMT MAE ratio " + fmt("%.2f", ratio) + " (>= " +
               fmt("%g", kCmtRatio) + "); with no-purchase: CMT " + fmt("%.5f", c.tree_np) + ", MNLKM " +
               fmt("%.5f", c.km_np);
    return o;
}

Outcome criterion3() {
    const auto c = compare_tree_mnlkm([](std::uint64_t s, std::size_t n) { return gen_kmeans_truth(s, n); }, 3);
    Outcome o;
    o.pass = c.tree <= kKmeansRatio * c.km;
    o.detail = "mean CMT MAE " + fmt("%.5f", c.tree) + " vs " + fmt("%g", kKmeansRatio) + " x MNLKM " +
               fmt("%.5f", c.km) + " = " + fmt("%.5f", kKmeansRatio * c.km) + "; with no-purchase: CMT " +
               fmt("%.5f", c.tree_np) + ", MNLKM " + fmt("%.5f", c.km_np);
    return o;
}

// ---------------------------------------------------------------- 4
Outcome criterion4() {
    Outcome o;
    std::size_t violations = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    std::string worst;
    for (int seed = 1; seed <= kAuctionSeeds; ++seed) {
        const auto t0 = clock_type::now();
        const auto g = gen_auctions(static_cast<std::uint64_t>(seed), kAuctionTrain + 2 * kAuctionHoldout,
                                    kAuctionSegments);
        const auto s = split3(g.data, kAuctionTrain, kAuctionHoldout);

        const auto ir = fit_context_free(s.train, LeafFamily::isotonic, FitConfig{});
        const auto lr = fit_context_free(s.train, LeafFamily::logistic, FitConfig{});
        KMeansConfig kc;
        kc.restarts = 3;
        kc.sample_limit = 100000;
        const LeafFamily fams[] = {LeafFamily::isotonic, LeafFamily::logistic};
        const auto km = tune_k_multi(s.train, s.validation, kAuctionKmax, fams, FitConfig{},
                                     static_cast<std::uint64_t>(seed), kc, kWorkers);
        auto cfg_i = tree_config(LeafFamily::isotonic, static_cast<std::uint64_t>(seed));
        auto cfg_l = tree_config(LeafFamily::logistic, static_cast<std::uint64_t>(seed));
        cfg_i.min_leaf_size = cfg_l.min_leaf_size = 1000;
        const auto irt = prune(grow(s.train, cfg_i).tree, s.validation);
        const auto lrt = prune(grow(s.train, cfg_l).tree, s.validation);

        const double m_ir = brier(ir, s.test), m_lr = brier(lr, s.test);
        const double m_irkm = brier(km[0].model, s.test), m_lrkm = brier(km[1].model, s.test);
        const double m_irt = brier(irt, s.test), m_lrt = brier(lrt, s.test);
        std::printf("  [4] seed %d: MSE IRT %.5f LRT %.5f IRKM %.5f (K=%zu) LRKM %.5f (K=%zu) IR %.5f LR %.5f, "
                    "IRT leaves %zu, const %.5f, truth %.5f (%.1fs)\n",
                    seed, m_irt, m_lrt, m_irkm, km[0].selected_k, m_lrkm, km[1].selected_k, m_ir, m_lr,
                    irt.leaf_count(), brier(fit_context_free(s.train, LeafFamily::constant, FitConfig{}), s.test),
                    brier(g.truth, s.test), seconds_since(t0));
        std::fflush(stdout);
        const std::pair<const char*, std::pair<double, double>> pairs[] = {
            {"IRT<IRKM", {m_irt, m_irkm}}, {"IRKM<IR", {m_irkm, m_ir}}, {"IRT<LRT", {m_irt, m_lrt}},
            {"IRKM<LRKM", {m_irkm, m_lrkm}}, {"IR<LR", {m_ir, m_lr}}};
        for (const auto& [name, v] : pairs) {
            const double margin = (v.second - v.first) / v.second;
            if (margin < min_margin) {
                min_margin = margin;
                worst = std::string(name) + " seed " + std::to_string(seed);
            }
            violations += margin >= kAuctionMargin ? 0 : 1;
        }
    }
    o.pass = violations == 0;
    o.detail = std::to_string(violations) + " ordering violations over " + std::to_string(kAuctionSeeds) +
               " seeds; smallest relative margin " + fmt("%.4f", min_margin) + " (" + worst + ", need >= " +
               fmt("%g", kAuctionMargin) + ")";
    return o;
}

// ---------------------------------------------------------------- 5
/// Pool-free reference: f_i = min_{k >= i} max_{j <= i} mean(y[j..k]) over tie-pooled blocks.
std::vector<double> minmax_isotonic(const std::vector<double>& y, const std::vector<double>& w) {
    const std::size_t m = y.size();
    std::vector<double> f(m);
    for (std::size_t i = 0; i < m; ++i) {
        double outer = std::numeric_limits<double>::infinity();
        for (std::size_t k = i; k < m; ++k) {
            double inner = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j <= i; ++j) {
                double sy = 0.0, sw = 0.0;
                for (std::size_t t = j; t <= k; ++t) {
                    sy += w[t] * y[t];
                    sw += w[t];
                }
                inner = std::max(inner, sy / sw);
            }
            outer = std::min(outer, inner);
        }
        f[i] = outer;
    }
    return f;
}

/// KKT residual of the isotonic QP  min sum w_i (f_i - y_i)^2  s.t. f_1 <= ... <= f_m.
/// Multipliers lambda_i = sum_{t <= i} 2 w_t (y_t - f_t) must be >= 0, vanish at the end
/// and wherever the constraint f_i <= f_{i+1} is slack.
double kkt_residual(const std::vector<double>& f, const std::vector<double>& y, const std::vector<double>& w) {
    double worst = 0.0;
    double lambda = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        lambda += 2.0 * w[i] * (y[i] - f[i]);
        if (i + 1 < f.size()) {
            worst = std::max(worst, f[i] - f[i + 1]);                  // primal feasibility
            worst = std::max(worst, -lambda);                          // dual feasibility
            if (f[i + 1] - f[i] > 1e-12) {
                worst = std::max(worst, std::abs(lambda));              // complementary slackness
            }
        } else {
            worst = std::max(worst, std::abs(lambda));                  // stationarity at the end
        }
    }
    return worst;
}

Dataset random_choice(std::uint64_t seed, std::size_t n, std::size_t dim) {
    ContextSchema schema({{"x0", VariableKind::numeric, {}}});
    Dataset d(schema, PayloadKind::choice, dim);
    CounterRng rng(seed);
    for (std::size_t r = 0; r < n; ++r) {
        const auto h = static_cast<std::size_t>(rng.uniform_int(1, 4));
        std::vector<double> f(h * dim);
        for (auto& v : f) {
            v = rng.uniform(-1, 1);
        }
        std::vector<int> ids(h);
        for (std::size_t k = 0; k < h; ++k) {
            ids[k] = static_cast<int>(rng.uniform_int(0, 5));
        }
        const double x[] = {rng.uniform()};
        d.add_choice(x, f, ids, static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(h))));
    }
    return d;
}

Outcome criterion5() {
    // (a) PAVA against the exact QP solution.
    CounterRng rng(5);
    double pava_dev = 0.0;
    double kkt = 0.0;
    for (int t = 0; t < 200; ++t) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(1, 20));
        std::vector<double> x(n), y(n), w(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<double>(rng.uniform_int(0, 12));
            y[i] = t % 3 == 0 ? static_cast<double>(rng.uniform_int(0, 1)) : rng.uniform();
            w[i] = t % 2 == 0 ? 1.0 : rng.uniform(0.1, 3.0);
        }
        const auto curve = isotonic_fit(x, y, w);
        // Pool ties into blocks in bid order for the reference solutions.
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
        std::vector<double> bx, by, bw;
        for (auto i : order) {
            if (!bx.empty() && bx.back() == x[i]) {
                by.back() = (by.back() * bw.back() + y[i] * w[i]) / (bw.back() + w[i]);
                bw.back() += w[i];
            } else {
                bx.push_back(x[i]);
                by.push_back(y[i]);
                bw.push_back(w[i]);
            }
        }
        const auto ref = minmax_isotonic(by, bw);
        std::vector<double> fitted(bx.size());
        for (std::size_t b = 0; b < bx.size(); ++b) {
            fitted[b] = curve(bx[b]);
            pava_dev = std::max(pava_dev, std::abs(fitted[b] - ref[b]));
        }
        kkt = std::max(kkt, kkt_residual(fitted, by, bw));
    }

    // (b) MNL gradient against central differences.
    double grad_err = 0.0;
    for (int t = 0; t < 100; ++t) {
        const bool specific = t % 2 == 1;
        const auto d = random_choice(100 + static_cast<std::uint64_t>(t), 40, 3);
        const auto rows = d.all_rows();
        MnlObjective obj(d, rows, specific, specific ? d.option_slots() : 1, 1e-3);
        Eigen::VectorXd th(static_cast<Eigen::Index>(obj.dimension()));
        for (Eigen::Index i = 0; i < th.size(); ++i) {
            th(i) = rng.uniform(-1, 1);
        }
        Eigen::VectorXd g;
        obj.evaluate(th, &g, nullptr);
        Eigen::VectorXd fd(th.size());
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < th.size(); ++i) {
            Eigen::VectorXd a = th, b = th;
            a(i) += h;
            b(i) -= h;
            fd(i) = (obj.evaluate(a, nullptr, nullptr) - obj.evaluate(b, nullptr, nullptr)) / (2 * h);
        }
        grad_err = std::max(grad_err, (g - fd).norm() / std::max(g.norm(), 1e-12));
    }

    // (c) mnl_fit against a nested 1-D grid search: 50/100 buyers -> 0, 66/99 -> ln 2.
    FitConfig cfg;
    cfg.l2_ridge = 0.0;
    cfg.gradient_tolerance = 1e-12;
    double grid_err = 0.0;
    for (auto [n, chosen, closed] : {std::tuple{100, 50, 0.0}, std::tuple{99, 66, std::log(2.0)}}) {
        Dataset d(ContextSchema({{"x0", VariableKind::numeric, {}}}), PayloadKind::choice, 1);
        for (int i = 0; i < n; ++i) {
            const double x[] = {0.0}, f[] = {1.0};
            const int ids[] = {0};
            d.add_choice(x, f, ids, i < chosen ? 1 : 0);
        }
        const auto rows = d.all_rows();
        const double fitted = mnl_fit(d, rows, cfg).params.beta[0];
        double lo = -5.0, hi = 5.0, step = 0.01, best = 0.0;
        for (int level = 0; level < 7; ++level) {
            double best_v = std::numeric_limits<double>::infinity();
            for (double b = lo; b <= hi + 1e-15; b += step) {
                auto p = MnlParams::zeros(1);
                p.beta[0] = b;
                const double v = mnl_loss(p, d, rows);
                if (v < best_v) {
                    best_v = v;
                    best = b;
                }
            }
            lo = best - step;
            hi = best + step;
            step /= 10.0;
        }
        grid_err = std::max({grid_err, std::abs(fitted - best), std::abs(fitted - closed)});
    }

    Outcome o;
    o.pass = pava_dev <= kPavaTol && kkt <= kPavaTol && grad_err <= kGradTol && grid_err <= kGridTol;
    o.detail = "PAVA max deviation " + fmt("%.2e", pava_dev) + ", KKT residual " + fmt("%.2e", kkt) + " (<= " +
               fmt("%g", kPavaTol) + "); gradient rel. error " + fmt("%.2e", grad_err) + " (<= " +
               fmt("%g", kGradTol) + "); grid |beta - beta*| " + fmt("%.2e", grid_err) + " (<= " +
               fmt("%g", kGridTol) + ")";
    return o;
}

// ---------------------------------------------------------------- 6
double param_distance(const Tree& a, const Tree& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.nodes().size(); ++i) {
        const auto pa = a.node(i).model->parameters();
        const auto pb = b.node(i).model->parameters();
        if (pa.size() != pb.size()) {
            return std::numeric_limits<double>::infinity();
        }
        for (std::size_t k = 0; k < pa.size(); ++k) {
            worst = std::max(worst, std::abs(pa[k] - pb[k]));
        }
        if (a.node(i).model->family() == LeafFamily::isotonic && !(*a.node(i).model == *b.node(i).model)) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return worst;
}

bool same_structure(const Tree& a, const Tree& b) {
    if (a.nodes().size() != b.nodes().size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.nodes().size(); ++i) {
        const auto& na = a.node(i);
        const auto& nb = b.node(i);
        if (na.left != nb.left || na.right != nb.right || na.split.has_value() != nb.split.has_value() ||
            (na.split && !(*na.split == *nb.split))) {
            return false;
        }
    }
    return true;
}

Outcome criterion6() {
    struct Case {
        const char* name;
        Generated g;
        TrainConfig cfg;
        std::vector<Metric> metrics;
    };
    std::vector<Case> cases;
    {
        auto cfg = tree_config(LeafFamily::mnl, 42);
        cases.push_back({"cmt/newton", gen_cmt_truth(42, 12000), cfg, {Metric::mae, Metric::mse, Metric::nll}});
        cfg.adaptive_switch_threshold = 3000; // exercise the SGD path too
        cases.push_back({"cmt/sgd", gen_cmt_truth(43, 12000), cfg, {Metric::mae, Metric::mse, Metric::nll}});
        auto iso = tree_config(LeafFamily::isotonic, 44);
        cases.push_back({"auction/isotonic", gen_auctions(44, 20000, 8), iso, {Metric::mse, Metric::auc}});
    }
    bool ok = true;
    double worst = 0.0;
    std::string note;
    for (auto& c : cases) {
        const auto test = c.g.data.slice(c.g.data.size() * 2 / 3, c.g.data.size());
        const auto train = c.g.data.slice(0, c.g.data.size() * 2 / 3);
        Tree ref;
        std::string ref_tsv, ref_json, ref_doc;
        for (int q : {1, 2, 8}) {
            c.cfg.worker_count = q;
            const auto tree = grow(train, c.cfg).tree;
            const GroundTruth* truth = c.g.truth.variant == TruthVariant::segmented_auction ? nullptr : &c.g.truth;
            const auto rep = evaluate_report(tree, test, c.metrics, &tree, truth);
            const auto tsv = rep.to_tsv();
            const auto json = rep.to_json().dump(2);
            if (q == 1) {
                ref = tree;
                ref_tsv = tsv;
                ref_json = json;
                ref_doc = serialize(tree);
                continue;
            }
            if (!same_structure(ref, tree)) {
                ok = false;
                note += std::string(" ") + c.name + " Q=" + std::to_string(q) + " structure differs;";
                continue;
            }
            const double d = param_distance(ref, tree);
            worst = std::max(worst, d);
            if (d > kParallelTol || tsv != ref_tsv || json != ref_json || serialize(tree) != ref_doc) {
                ok = false;
                note += std::string(" ") + c.name + " Q=" + std::to_string(q) + " differs;";
            }
        }
    }
    Outcome o;
    o.pass = ok;
    o.detail = "3 setups x Q in {1,2,8}: max leaf-parameter difference " + fmt("%.1e", worst) + " (<= " +
               fmt("%g", kParallelTol) + "), reports " + (ok ? "bytewise identical" : "differ:" + note);
    return o;
}

// ---------------------------------------------------------------- 7
Outcome criterion7() {
    double worst_rel = 0.0;
    bool fewer = true;
    std::string iters;
    for (int seed = 1; seed <= 5; ++seed) {
        const auto g = gen_cmt_truth(static_cast<std::uint64_t>(100 + seed), kRows);
        auto cfg = tree_config(LeafFamily::mnl, static_cast<std::uint64_t>(seed));
        const auto warm = grow(g.data, cfg);
        cfg.warm_starts = false;
        const auto cold = grow(g.data, cfg);
        const double lw = tree_loss(warm.tree, g.data);
        const double lc = tree_loss(cold.tree, g.data);
        worst_rel = std::max(worst_rel, std::abs(lw - lc) / std::abs(lc));
        fewer = fewer && warm.stats.total_iterations <= cold.stats.total_iterations;
        iters += " " + std::to_string(warm.stats.total_iterations) + "/" + std::to_string(cold.stats.total_iterations);
        std::printf("  [7] seed %d: loss warm %.6f cold %.6f, iterations warm %lld cold %lld\n", seed, lw, lc,
                    static_cast<long long>(warm.stats.total_iterations),
                    static_cast<long long>(cold.stats.total_iterations));
        std::fflush(stdout);
    }
    Outcome o;
    o.pass = worst_rel <= kWarmLossTol && fewer;
    o.detail = "max relative training-loss gap " + fmt("%.2e", worst_rel) + " (<= " + fmt("%g", kWarmLossTol) +
               "), iterations warm/cold:" + iters;
    return o;
}

// ---------------------------------------------------------------- 8
Outcome criterion8() {
    Outcome o;
    o.pass = audit.trees > 0 && audit.violations == 0;
    o.detail = std::to_string(audit.trees) + " trees from the criteria run, " + std::to_string(audit.violations) +
               " violations, worst validation gap pruned - unpruned " + fmt("%.3e", audit.worst_gap) + " (<= " +
               fmt("%g", kPruneTol) + "); subtree and idempotence checked";
    return o;
}

} // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) {
        wanted.insert(std::atoi(argv[i]));
    }
    if (wanted.empty()) {
        wanted = {1, 2, 3, 4, 5, 6, 7, 8};
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"context-free recovery", criterion1},
        {"CMT ground-truth recovery", criterion2},
        {"k-means ground-truth robustness", criterion3},
        {"IRT ordering on synthetic auctions", criterion4},
        {"oracle equivalences", criterion5},
        {"determinism and parallel correctness", criterion6},
        {"warm-start fidelity", criterion7},
        {"pruning contract", criterion8},
    };
    bool all = true;
    for (int k = 1; k <= 8; ++k) {
        if (!wanted.count(k)) {
            continue;
        }
        if (k == 8 && !(wanted.count(1) || wanted.count(2) || wanted.count(3))) {
            // Criterion 8 audits the trees of 1-3; build a small set when they were skipped.
            for (int seed = 1; seed <= 3; ++seed) {
                const auto g = gen_cmt_truth(static_cast<std::uint64_t>(seed), 3 * kRows);
                grow_and_prune(split3(g.data, kRows, kRows), LeafFamily::mnl, static_cast<std::uint64_t>(seed));
            }
        }
        const auto t0 = clock_type::now();
        auto o = criteria[static_cast<std::size_t>(k - 1)].second();
        o.detail += " [" + fmt("%.0f", seconds_since(t0)) + "s]";
        report(k, criteria[static_cast<std::size_t>(k - 1)].first, o);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
