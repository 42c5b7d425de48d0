// mst: command-line front end for market segmentation trees.

#include "mst/benchmarks.hpp"
#include "mst/config.hpp"
#include "mst/datagen.hpp"
#include "mst/error.hpp"
#include "mst/io.hpp"
#include "mst/metrics.hpp"
#include "mst/pruner.hpp"
#include "mst/serialization.hpp"
#include "mst/trainer.hpp"
#include "mst/tree.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <variant>

namespace fs = std::filesystem;
using namespace mst;

namespace {

/// Option values for one subcommand: flags first, then config-file overrides.
struct Settings {
    std::map<std::string, std::string> values;
    std::map<std::string, std::vector<std::string>> lists;
    std::set<std::string> present;
    std::string config_path;

    void add(CLI::App* app, const std::string& name, const std::string& help) {
        app->add_option("--" + name, values[name], help);
    }
    void add_list(CLI::App* app, const std::string& name, const std::string& help) {
        app->add_option("--" + name, lists[name], help);
    }
    void add_flag(CLI::App* app, const std::string& name, const std::string& help) {
        app->add_flag("--" + name, [this, name](std::int64_t) { values[name] = "true"; }, help);
    }
    void add_config(CLI::App* app) { app->add_option("--config", config_path, "key=value file overriding flags"); }

    void finalize(CLI::App* app) {
        for (auto& [k, v] : values) {
            if (app->get_option_no_throw("--" + k) && app->count("--" + k) > 0) {
                present.insert(k);
            }
        }
        for (auto& [k, v] : lists) {
            if (!v.empty()) {
                present.insert(k);
            }
        }
        if (config_path.empty()) {
            return;
        }
        for (const auto& [raw, v] : load_config(config_path)) {
            const auto k = canonical_key(raw);
            if (values.count(k)) {
                values[k] = v;
            } else if (lists.count(k)) {
                lists[k].clear();
                std::stringstream ss(v);
                std::string item;
                while (std::getline(ss, item, ';')) {
                    if (!item.empty()) {
                        lists[k].push_back(item);
                    }
                }
            } else {
                throw Error(config_path + ": unknown setting '" + k + "' for this command");
            }
            present.insert(k);
        }
    }

    bool has(const std::string& k) const { return present.count(k) > 0; }
    const std::string& get(const std::string& k) const {
        if (!has(k)) {
            throw Error("missing required setting --" + k);
        }
        return values.at(k);
    }
    std::string get_or(const std::string& k, const std::string& fallback) const {
        return has(k) ? values.at(k) : fallback;
    }
    const std::vector<std::string>& list(const std::string& k) const { return lists.at(k); }
};

std::uint64_t seed_of(const Settings& s) {
    const auto v = parse_int_value("seed", s.get("seed"));
    if (v < 0) {
        throw Error("seed must be non-negative");
    }
    return static_cast<std::uint64_t>(v);
}

/// A loaded model of either document kind.
struct LoadedModel {
    std::variant<Tree, ClusteredModel> model;

    const Predictor& predictor() const {
        return std::visit([](const auto& m) -> const Predictor& { return m; }, model);
    }
    const Tree* tree() const { return std::get_if<Tree>(&model); }
    LeafFamily family() const {
        return std::visit([](const auto& m) { return m.family(); }, model);
    }
    const ContextSchema& schema() const {
        if (const auto* t = tree()) {
            return t->schema();
        }
        return std::get<ClusteredModel>(model).encoder().schema();
    }
};

LoadedModel load_model(const std::string& path) {
    const auto text = read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(path + ": not a model document: " + e.what());
    }
    const auto fmt = doc.value("format", std::string());
    if (fmt == kClusteredFormat) {
        return {deserialize_clustered(text)};
    }
    if (doc.contains("truth")) {
        throw DecodeError(path + " holds a ground truth, not a model");
    }
    return {deserialize(text)};
}

DataFormat format_for(const Settings& s, LeafFamily family) {
    if (s.has("format")) {
        return parse_data_format(s.get("format"));
    }
    return payload_kind(family) == PayloadKind::choice ? DataFormat::choice_long : DataFormat::auction_flat;
}

IngestOptions ingest_options(const Settings& s, const ContextSchema* hint) {
    IngestOptions o;
    for (const auto& f : s.list("filter")) {
        o.filters.push_back(parse_filter(f));
    }
    if (hint) {
        o.schema_hint = *hint;
    }
    return o;
}

void ensure_parent(const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) {
        fs::create_directories(parent);
    }
}

void write_output(const std::string& path, const std::string& content) {
    ensure_parent(path);
    write_atomic(path, content);
}

// ---------------------------------------------------------------- simulate

void run_simulate(const Settings& s) {
    const auto seed = seed_of(s);
    const auto truth = parse_truth_variant(s.get("truth"));
    const auto n = static_cast<std::size_t>(parse_int_value("n", s.get_or("n", "25000")));
    const auto out = s.get("out");
    if (n == 0) {
        throw Error("--n must be positive");
    }
    Generated g;
    switch (truth) {
    case TruthVariant::context_free:
        g = gen_context_free(seed, 3 * n);
        break;
    case TruthVariant::cmt:
        g = gen_cmt_truth(seed, 3 * n);
        break;
    case TruthVariant::kmeans_mixture:
        g = gen_kmeans_truth(seed, 3 * n, parse_real_value("sigma", s.get_or("sigma", "0.08")));
        break;
    case TruthVariant::segmented_auction:
        g = gen_auctions(seed, 3 * n, static_cast<std::size_t>(parse_int_value("segments", s.get_or("segments", "8"))));
        break;
    }
    fs::create_directories(out);
    export_file(g.data.slice(0, n), (fs::path(out) / "train.csv").string());
    export_file(g.data.slice(n, 2 * n), (fs::path(out) / "validation.csv").string());
    export_file(g.data.slice(2 * n, 3 * n), (fs::path(out) / "test.csv").string());
    write_atomic((fs::path(out) / "truth.json").string(), truth_to_document(g.truth));
    std::cout << "wrote " << 3 * n << " rows (" << n << " per split) and truth.json to " << out << "\n";
}

// ---------------------------------------------------------------- train

TrainConfig train_config_from(const Settings& s) {
    TrainConfig c;
    for (const auto& key : train_keys()) {
        if (s.has(key)) {
            apply_train_key(c, key, s.get(key));
        }
    }
    c.validate();
    return c;
}

void run_train(const Settings& s) {
    seed_of(s);
    auto cfg = train_config_from(s);
    const auto method = s.get_or("method", "tree");
    const auto format = format_for(s, cfg.family);
    const auto train = ingest(s.get("train"), format, ingest_options(s, nullptr));
    const auto out = s.get("out");
    std::ostringstream log;
    const auto start = std::chrono::steady_clock::now();
    std::string document;
    if (method == "tree") {
        auto result = grow(train, cfg, [&](const DepthProgress& p) {
            const auto line = format_progress(p);
            log << line << "\n";
            std::cerr << line << "\n";
        });
        log << "leaves=" << result.tree.leaf_count() << " depth=" << result.tree.depth()
            << " iterations=" << result.stats.total_iterations
            << " all_converged=" << (result.stats.all_converged ? "true" : "false") << "\n";
        document = serialize(result.tree);
    } else if (method == "kmeans") {
        const auto k_max = static_cast<std::size_t>(parse_int_value("kmax", s.get_or("kmax", "1")));
        KMeansConfig kcfg;
        if (s.has("restarts")) {
            kcfg.restarts = static_cast<std::size_t>(parse_int_value("restarts", s.get("restarts")));
        }
        ClusteredModel model;
        if (k_max > 1) {
            const auto validation =
                ingest(s.get("validation"), format, ingest_options(s, &train.schema()));
            auto tuned = tune_k(train, validation, k_max, cfg.family, cfg.fit_config, cfg.seed, kcfg,
                                cfg.worker_count);
            for (std::size_t k = 0; k < tuned.validation_loss.size(); ++k) {
                log << "k=" << k + 1 << " validation_loss=" << format_real(tuned.validation_loss[k]) << "\n";
            }
            log << "selected_k=" << tuned.selected_k << "\n";
            model = std::move(tuned.model);
        } else {
            model = fit_context_free(train, cfg.family, cfg.fit_config);
            log << "selected_k=1\n";
        }
        document = serialize_clustered(model);
    } else {
        throw Error("--method must be tree or kmeans");
    }
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "trained in " << ms << " ms\n";
    write_output(out, document);
    if (s.has("log")) {
        write_output(s.get("log"), log.str());
    }
}

// ---------------------------------------------------------------- prune

void run_prune(const Settings& s) {
    const auto loaded = load_model(s.get("model"));
    const Tree* tree = loaded.tree();
    if (!tree) {
        throw Error("prune needs a tree model");
    }
    const auto format = format_for(s, tree->family());
    const auto validation = ingest(s.get("validation"), format, ingest_options(s, &tree->schema()));
    std::optional<Dataset> train;
    if (s.has("train")) {
        train = ingest(s.get("train"), format, ingest_options(s, &tree->schema()));
    }
    PruneConfig pc;
    pc.metric = parse_prune_metric(s.get_or("prune-metric", "family"));
    const auto result = prune_with_path(*tree, validation, pc, train ? &*train : nullptr);
    std::ostringstream table;
    table << "alpha\tleaves\tvalidation_metric\tselected\n";
    for (std::size_t i = 0; i < result.sequence.size(); ++i) {
        const auto& st = result.sequence[i];
        table << format_real(st.alpha) << '\t' << st.leaves << '\t' << format_real(st.validation_metric) << '\t'
              << (i == result.selected ? 1 : 0) << '\n';
    }
    std::cerr << table.str();
    write_output(s.get("out"), serialize(result.tree));
    if (s.has("path-out")) {
        write_output(s.get("path-out"), table.str());
    }
}

// ---------------------------------------------------------------- predict / evaluate

void run_predict(const Settings& s) {
    const auto loaded = load_model(s.get("model"));
    const auto format = format_for(s, loaded.family());
    const auto test = ingest(s.get("test"), format, ingest_options(s, &loaded.schema()));
    std::ostringstream os;
    std::vector<double> p;
    if (test.kind() == PayloadKind::choice) {
        os << "row_id,outcome,option_id,probability\n";
        for (std::size_t r = 0; r < test.size(); ++r) {
            loaded.predictor().predict(test, r, p);
            const auto ids = test.option_ids(r);
            for (std::size_t h = 0; h < p.size(); ++h) {
                os << test.row_id(r) << ',' << h << ',' << (h == 0 ? std::string("none") : std::to_string(ids[h - 1]))
                   << ',' << format_real(p[h]) << '\n';
            }
        }
    } else {
        os << "row_id,win_probability\n";
        for (std::size_t r = 0; r < test.size(); ++r) {
            loaded.predictor().predict(test, r, p);
            os << test.row_id(r) << ',' << format_real(p[0]) << '\n';
        }
    }
    write_output(s.get("out"), os.str());
}

void run_evaluate(const Settings& s) {
    const auto loaded = load_model(s.get("model"));
    const auto format = format_for(s, loaded.family());
    const auto test = ingest(s.get("test"), format, ingest_options(s, &loaded.schema()));
    std::vector<Metric> metrics;
    for (const auto& m : s.list("metric")) {
        metrics.push_back(parse_metric(m));
    }
    if (metrics.empty()) {
        metrics.push_back(Metric::mse);
    }
    std::optional<GroundTruth> truth;
    if (s.has("truth-file")) {
        truth = truth_from_document(read_file(s.get("truth-file")));
    }
    for (auto m : metrics) {
        if (m == Metric::mae && !truth) {
            throw Error("--metric mae needs --truth-file");
        }
    }
    MaeOptions mo;
    mo.include_no_purchase = s.has("include-no-purchase");
    mo.posterior_mixture = s.has("posterior-mixture");
    const auto report = evaluate_report(loaded.predictor(), test, metrics, loaded.tree(), truth ? &*truth : nullptr, mo);
    const auto out = s.get("out");
    fs::create_directories(out);
    write_atomic((fs::path(out) / "report.json").string(), report.to_json().dump(1) + "\n");
    write_atomic((fs::path(out) / "report.tsv").string(), report.to_tsv());
    if (std::find(metrics.begin(), metrics.end(), Metric::auc) != metrics.end()) {
        std::vector<double> scores;
        std::vector<int> labels;
        std::vector<double> p;
        for (std::size_t r = 0; r < test.size(); ++r) {
            loaded.predictor().predict(test, r, p);
            scores.push_back(p[0]);
            labels.push_back(test.win(r));
        }
        std::ostringstream roc;
        roc << "fpr\ttpr\n";
        for (const auto& [x, y] : roc_curve(scores, labels)) {
            roc << format_real(x) << '\t' << format_real(y) << '\n';
        }
        write_atomic((fs::path(out) / "roc.tsv").string(), roc.str());
    }
    if (s.has("baseline")) {
        const Tree* router = loaded.tree();
        if (!router) {
            throw Error("--baseline comparison needs a tree model to define segments");
        }
        const auto base = load_model(s.get("baseline"));
        std::ostringstream os;
        os << "metric\tleaf_id\trows\tmodel\tbaseline\timprovement_percent\n";
        for (auto m : metrics) {
            for (const auto& li :
                 per_leaf_improvement(loaded.predictor(), base.predictor(), *router, test, m, 50,
                                      truth ? &*truth : nullptr)) {
                os << to_string(m) << '\t' << li.leaf_id << '\t' << li.rows << '\t' << format_real(li.metric_a)
                   << '\t' << format_real(li.metric_b) << '\t' << format_real(li.improvement_percent) << '\n';
            }
        }
        write_atomic((fs::path(out) / "leaf_improvement.tsv").string(), os.str());
    }
    std::cout << report.to_tsv();
}

// ---------------------------------------------------------------- inspect / bench

void run_inspect(const Settings& s) {
    const auto loaded = load_model(s.get("model"));
    std::string text;
    const auto fmt = s.get_or("format", "text");
    if (const Tree* t = loaded.tree()) {
        if (fmt != "text" && fmt != "dot") {
            throw Error("--format must be text or dot");
        }
        text = describe(*t, fmt == "dot" ? DescribeFormat::dot : DescribeFormat::text);
    } else {
        const auto& m = std::get<ClusteredModel>(loaded.model);
        std::ostringstream os;
        os << "clustered model: family=" << to_string(m.family()) << " k=" << m.k() << "\n";
        for (std::size_t c = 0; c < m.k(); ++c) {
            os << "cluster " << c << ": " << m.models()[c].summary() << "\n";
        }
        text = os.str();
    }
    if (s.has("out")) {
        write_output(s.get("out"), text);
    } else {
        std::cout << text;
    }
}

std::vector<long long> int_list(const std::string& key, const std::string& value) {
    std::vector<long long> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_int_value(key, item));
    }
    if (out.empty()) {
        throw Error("--" + key + " needs at least one value");
    }
    return out;
}

void run_bench(const Settings& s) {
    const auto seed = seed_of(s);
    const auto ns = int_list("n", s.get_or("n", "2000,4000"));
    const auto depths = int_list("depths", s.get_or("depths", "1,2,3"));
    const auto workers = int_list("workers", s.get_or("workers", "1,2"));
    std::ostringstream os;
    os << "n\tm\tD\tQ\twall_ms\tleaves\n";
    for (auto n : ns) {
        const auto g = gen_cmt_truth(seed, static_cast<std::size_t>(n));
        for (auto d : depths) {
            for (auto q : workers) {
                TrainConfig cfg;
                cfg.max_depth = static_cast<int>(d);
                cfg.worker_count = static_cast<int>(q);
                cfg.min_leaf_size = 50;
                cfg.seed = seed;
                const auto start = std::chrono::steady_clock::now();
                const auto r = grow(g.data, cfg);
                const auto ms =
                    std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                        .count();
                os << n << '\t' << g.data.context_dim() << '\t' << d << '\t' << q << '\t' << ms << '\t'
                   << r.tree.leaf_count() << '\n';
            }
        }
    }
    if (s.has("out")) {
        write_output(s.get("out"), os.str());
    }
    std::cout << os.str();
}

void add_train_flags(CLI::App* app, Settings& s) {
    s.add(app, "leaf-family", "mnl|mnl-option-specific|isotonic|logistic|constant");
    s.add(app, "max-depth", "maximum tree depth (none = unlimited)");
    s.add(app, "min-leaf", "minimum rows per leaf");
    s.add(app, "q-split", "percentile step for numeric split candidates");
    s.add(app, "workers", "parallel split-search workers (Q)");
    s.add(app, "optimizer", "newton|lbfgs|sgd");
    s.add(app, "max-iterations", "optimizer iteration cap");
    s.add(app, "gradient-tolerance", "mean-gradient infinity-norm tolerance");
    s.add(app, "l2-ridge", "ridge weight");
    s.add(app, "sgd-batch-size", "SGD mini-batch size");
    s.add(app, "sgd-step", "SGD base step");
    s.add(app, "adaptive-switch", "row count above which MNL fits use SGD");
    s.add(app, "min-child-fraction", "minimum child share of parent rows");
    s.add(app, "warm-starts", "true|false");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mst: market segmentation trees"};
    app.require_subcommand(1);
    std::map<std::string, Settings> settings;
    std::map<std::string, std::function<void(const Settings&)>> handlers;

    auto sub = [&](const std::string& name, const std::string& help, auto&& handler) {
        auto* cmd = app.add_subcommand(name, help);
        handlers[name] = handler;
        auto& s = settings[name];
        s.add_config(cmd);
        s.lists["filter"];
        return std::pair<CLI::App*, Settings*>(cmd, &s);
    };

    {
        auto [c, s] = sub("simulate", "generate train/validation/test data and a ground truth", run_simulate);
        s->add(c, "truth", "context-free|cmt|kmeans|auction");
        s->add(c, "seed", "random seed");
        s->add(c, "n", "rows per split (default 25000)");
        s->add(c, "segments", "auction segments (default 8)");
        s->add(c, "sigma", "kmeans cluster spread (default 0.08)");
        s->add(c, "out", "output directory");
    }
    {
        auto [c, s] = sub("train", "grow a tree or fit a clustered benchmark", run_train);
        s->add(c, "train", "training data");
        s->add(c, "validation", "validation data (kmeans K tuning)");
        s->add(c, "format", "choice-long|auction-flat");
        s->add(c, "method", "tree|kmeans");
        s->add(c, "kmax", "largest K tried by kmeans");
        s->add(c, "restarts", "k-means restarts");
        s->add(c, "seed", "random seed");
        s->add(c, "out", "model output path");
        s->add(c, "log", "training log path");
        s->add_list(c, "filter", "row filter such as price<=4000");
        add_train_flags(c, *s);
    }
    {
        auto [c, s] = sub("prune", "cost-complexity pruning against validation data", run_prune);
        s->add(c, "model", "tree model");
        s->add(c, "validation", "validation data");
        s->add(c, "train", "training data (refits nodes without cached models)");
        s->add(c, "format", "choice-long|auction-flat");
        s->add(c, "prune-metric", "family|mse|nll");
        s->add(c, "out", "pruned model path");
        s->add(c, "path-out", "pruning sequence table");
        s->add_list(c, "filter", "row filter");
    }
    {
        auto [c, s] = sub("predict", "per-row predicted probabilities", run_predict);
        s->add(c, "model", "model document");
        s->add(c, "test", "data to score");
        s->add(c, "format", "choice-long|auction-flat");
        s->add(c, "out", "prediction file");
        s->add_list(c, "filter", "row filter");
    }
    {
        auto [c, s] = sub("evaluate", "metric report", run_evaluate);
        s->add(c, "model", "model document");
        s->add(c, "test", "test data");
        s->add(c, "format", "choice-long|auction-flat");
        s->add(c, "truth-file", "ground truth document (for mae)");
        s->add(c, "baseline", "model to compare against per leaf");
        s->add(c, "out", "report directory");
        s->add_flag(c, "include-no-purchase", "MAE also averages the no-purchase entry");
        s->add_flag(c, "posterior-mixture", "kmeans truth: compare with the posterior mixture");
        s->add_list(c, "metric", "mae|mse|nll|auc (repeatable)");
        s->add_list(c, "filter", "row filter");
    }
    {
        auto [c, s] = sub("inspect", "render a model", run_inspect);
        s->add(c, "model", "model document");
        s->add(c, "format", "text|dot");
        s->add(c, "out", "output file (default stdout)");
    }
    {
        auto [c, s] = sub("bench", "runtime scaling smoke table", run_bench);
        s->add(c, "seed", "random seed");
        s->add(c, "n", "comma-separated row counts");
        s->add(c, "depths", "comma-separated depths");
        s->add(c, "workers", "comma-separated worker counts");
        s->add(c, "out", "table path");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        for (auto* cmd : app.get_subcommands()) {
            auto& s = settings.at(cmd->get_name());
            s.finalize(cmd);
            handlers.at(cmd->get_name())(s);
        }
    } catch (const std::exception& e) {
        std::cerr << "mst: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
