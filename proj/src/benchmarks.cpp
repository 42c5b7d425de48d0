#include "mst/benchmarks.hpp"

#include "mst/error.hpp"
#include "mst/parallel.hpp"
#include "mst/rng.hpp"
#include "mst/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace mst {

using nlohmann::json;

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

/// Number of distinct rows, counting no further than `cap`.
std::size_t distinct_rows(std::span<const double> points, std::size_t dim, std::size_t cap) {
    std::set<std::vector<double>> seen;
    const std::size_t n = points.size() / dim;
    for (std::size_t i = 0; i < n && seen.size() < cap; ++i) {
        seen.emplace(points.begin() + static_cast<std::ptrdiff_t>(i * dim),
                     points.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    }
    return seen.size();
}

std::vector<double> plus_plus_seed(std::span<const double> pts, std::size_t n, std::size_t dim, std::size_t k,
                                   CounterRng& rng) {
    std::vector<double> centroids;
    centroids.reserve(k * dim);
    auto first = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    centroids.insert(centroids.end(), pts.begin() + static_cast<std::ptrdiff_t>(first * dim),
                     pts.begin() + static_cast<std::ptrdiff_t>((first + 1) * dim));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        const double* last = centroids.data() + (c - 1) * dim;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(pts.data() + i * dim, last, dim));
            total += d2[i];
        }
        std::size_t pick;
        if (total > 0.0) {
            pick = rng.categorical(d2);
        } else {
            pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        }
        centroids.insert(centroids.end(), pts.begin() + static_cast<std::ptrdiff_t>(pick * dim),
                         pts.begin() + static_cast<std::ptrdiff_t>((pick + 1) * dim));
    }
    return centroids;
}

bool assign(std::span<const double> pts, std::size_t n, std::size_t dim, std::span<const double> centroids,
            std::vector<int>& labels) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
        const int c = nearest_centroid(pts.subspan(i * dim, dim), centroids, dim);
        if (c != labels[i]) {
            labels[i] = c;
            changed = true;
        }
    }
    return changed;
}

void update_centroids(std::span<const double> pts, std::size_t n, std::size_t dim, std::size_t k,
                      std::vector<int>& labels, std::vector<double>& centroids) {
    std::vector<std::size_t> counts(k, 0);
    auto recompute = [&] {
        std::fill(centroids.begin(), centroids.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(labels[i]);
            ++counts[c];
            for (std::size_t j = 0; j < dim; ++j) {
                centroids[c * dim + j] += pts[i * dim + j];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (std::size_t j = 0; j < dim; ++j) {
                    centroids[c * dim + j] /= static_cast<double>(counts[c]);
                }
            }
        }
    };
    recompute();
    bool repaired = false;
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) {
            continue;
        }
        // Hand the empty cluster the point farthest from its own centroid.
        std::size_t far = n;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto own = static_cast<std::size_t>(labels[i]);
            if (counts[own] < 2) {
                continue;
            }
            const double d = sq_dist(pts.data() + i * dim, centroids.data() + own * dim, dim);
            if (d > best) {
                best = d;
                far = i;
            }
        }
        if (far == n) {
            throw Error("k-means could not repair an empty cluster");
        }
        --counts[static_cast<std::size_t>(labels[far])];
        labels[far] = static_cast<int>(c);
        counts[c] = 1;
        repaired = true;
    }
    if (repaired) {
        recompute();
    }
}

double inertia_of(std::span<const double> pts, std::size_t n, std::size_t dim, const std::vector<int>& labels,
                  const std::vector<double>& centroids) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += sq_dist(pts.data() + i * dim, centroids.data() + static_cast<std::size_t>(labels[i]) * dim, dim);
    }
    return s;
}

KMeansResult lloyd(std::span<const double> pts, std::size_t dim, std::size_t k, std::size_t max_iterations,
                   CounterRng& rng) {
    const std::size_t n = pts.size() / dim;
    KMeansResult res;
    res.centroids = plus_plus_seed(pts, n, dim, k, rng);
    res.assignments.assign(n, -1);
    assign(pts, n, dim, res.centroids, res.assignments);
    while (res.iterations < max_iterations) {
        update_centroids(pts, n, dim, k, res.assignments, res.centroids);
        res.inertia_trace.push_back(inertia_of(pts, n, dim, res.assignments, res.centroids));
        ++res.iterations;
        if (!assign(pts, n, dim, res.centroids, res.assignments)) {
            break;
        }
    }
    res.inertia = inertia_of(pts, n, dim, res.assignments, res.centroids);
    return res;
}

} // namespace

int nearest_centroid(std::span<const double> point, std::span<const double> centroids, std::size_t dim) {
    const std::size_t k = centroids.size() / dim;
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(point.data(), centroids.data() + c * dim, dim);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

KMeansResult kmeans(std::span<const double> points, std::size_t dim, std::size_t k, std::uint64_t seed,
                    const KMeansConfig& cfg) {
    if (dim == 0 || points.size() % dim != 0) {
        throw Error("k-means points must be a non-empty n x dim block");
    }
    if (k == 0) {
        throw Error("k-means needs k >= 1");
    }
    if (cfg.restarts == 0 || cfg.max_iterations == 0) {
        throw Error("k-means needs at least one restart and one iteration");
    }
    const std::size_t n = points.size() / dim;
    if (distinct_rows(points, dim, k) < k) {
        throw Error("k-means: k = " + std::to_string(k) + " exceeds the number of distinct points");
    }

    std::vector<double> sample;
    std::span<const double> fit_points = points;
    if (cfg.sample_limit > 0 && cfg.sample_limit < n) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        CounterRng srng(seed, 0x5a3b1e);
        shuffle(idx, srng);
        idx.resize(std::max(cfg.sample_limit, k));
        std::sort(idx.begin(), idx.end());
        sample.reserve(idx.size() * dim);
        for (std::size_t i : idx) {
            sample.insert(sample.end(), points.begin() + static_cast<std::ptrdiff_t>(i * dim),
                          points.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
        }
        fit_points = sample;
    }

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        CounterRng rng(seed, r + 1);
        auto res = lloyd(fit_points, dim, k, cfg.max_iterations, rng);
        if (res.inertia < best.inertia) {
            best = std::move(res);
        }
    }
    if (!sample.empty()) {
        best.assignments.assign(n, -1);
        assign(points, n, dim, best.centroids, best.assignments);
        std::vector<std::size_t> counts(k, 0);
        for (int a : best.assignments) {
            ++counts[static_cast<std::size_t>(a)];
        }
        if (std::find(counts.begin(), counts.end(), std::size_t{0}) != counts.end()) {
            update_centroids(points, n, dim, k, best.assignments, best.centroids);
        }
        best.inertia = inertia_of(points, n, dim, best.assignments, best.centroids);
    }
    return best;
}

// ---------------------------------------------------------------- encoder

ContextEncoder::ContextEncoder(ContextSchema schema, std::vector<double> means, std::vector<double> scales)
    : schema_(std::move(schema)), means_(std::move(means)), scales_(std::move(scales)) {
    if (means_.size() != schema_.size() || scales_.size() != schema_.size()) {
        throw Error("encoder constants do not match the schema");
    }
    for (std::size_t j = 0; j < schema_.size(); ++j) {
        if (schema_[j].kind == VariableKind::numeric) {
            if (!(scales_[j] > 0.0) || !std::isfinite(means_[j])) {
                throw Error("encoder scales must be positive and means finite");
            }
            ++dim_;
        } else {
            dim_ += schema_[j].categories.size();
        }
    }
}

ContextEncoder ContextEncoder::fit(const Dataset& data) {
    const auto& schema = data.schema();
    std::vector<double> means(schema.size(), 0.0);
    std::vector<double> scales(schema.size(), 1.0);
    const auto n = static_cast<double>(data.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (schema[j].kind != VariableKind::numeric || data.empty()) {
            continue;
        }
        double s = 0.0;
        for (std::size_t r = 0; r < data.size(); ++r) {
            s += data.context_value(r, j);
        }
        const double mean = s / n;
        double v = 0.0;
        for (std::size_t r = 0; r < data.size(); ++r) {
            const double d = data.context_value(r, j) - mean;
            v += d * d;
        }
        const double sd = std::sqrt(v / n);
        means[j] = mean;
        scales[j] = sd > 1e-12 ? sd : 1.0;
    }
    return ContextEncoder(schema, std::move(means), std::move(scales));
}

void ContextEncoder::encode(std::span<const double> context, std::span<double> out) const {
    std::size_t pos = 0;
    for (std::size_t j = 0; j < schema_.size(); ++j) {
        if (schema_[j].kind == VariableKind::numeric) {
            out[pos++] = (context[j] - means_[j]) / scales_[j];
        } else {
            const std::size_t width = schema_[j].categories.size();
            std::fill(out.begin() + static_cast<std::ptrdiff_t>(pos),
                      out.begin() + static_cast<std::ptrdiff_t>(pos + width), 0.0);
            const double code = context[j];
            if (code >= 0.0 && code < static_cast<double>(width)) {
                out[pos + static_cast<std::size_t>(code)] = 1.0;
            }
            pos += width;
        }
    }
}

std::vector<double> ContextEncoder::encode_all(const Dataset& data) const {
    std::vector<double> out(data.size() * dim_);
    for (std::size_t r = 0; r < data.size(); ++r) {
        encode(data.context(r), std::span<double>(out.data() + r * dim_, dim_));
    }
    return out;
}

// ---------------------------------------------------------------- clustered model

ClusteredModel::ClusteredModel(LeafFamily family, ContextEncoder encoder, std::vector<double> centroids,
                               std::vector<LeafModel> models)
    : family_(family), encoder_(std::move(encoder)), centroids_(std::move(centroids)), models_(std::move(models)) {
    if (models_.empty()) {
        throw Error("clustered model needs at least one cluster");
    }
    if (centroids_.size() != models_.size() * encoder_.dim()) {
        throw Error("clustered model needs one centroid per model");
    }
    for (const auto& m : models_) {
        if (m.family() != family_) {
            throw Error("cluster model family does not match");
        }
    }
}

int ClusteredModel::cluster_of(std::span<const double> context) const {
    if (models_.size() == 1) {
        return 0;
    }
    std::vector<double> z(encoder_.dim());
    encoder_.encode(context, z);
    return nearest_centroid(z, centroids_, encoder_.dim());
}

void ClusteredModel::predict(const Dataset& data, std::size_t row, std::vector<double>& out) const {
    models_[static_cast<std::size_t>(cluster_of(data.context(row)))].predict(data, row, out);
}

double ClusteredModel::mean_loss(const Dataset& data) const {
    if (data.empty()) {
        throw Error("mean loss over an empty dataset");
    }
    double s = 0.0;
    for (std::size_t r = 0; r < data.size(); ++r) {
        s += models_[static_cast<std::size_t>(cluster_of(data.context(r)))].row_loss(data, r);
    }
    return s / static_cast<double>(data.size());
}

namespace {

std::vector<double> column_means(const std::vector<double>& encoded, std::size_t dim) {
    std::vector<double> mean(dim, 0.0);
    const std::size_t n = dim == 0 ? 0 : encoded.size() / dim;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            mean[j] += encoded[i * dim + j];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(std::max<std::size_t>(n, 1));
    }
    return mean;
}

struct Clustering {
    std::vector<double> centroids;
    std::vector<std::vector<std::size_t>> members;
};

Clustering cluster_rows(const std::vector<double>& encoded, std::size_t dim, std::size_t n, std::size_t k,
                        std::uint64_t seed, const KMeansConfig& kcfg) {
    Clustering c;
    if (k == 1) {
        c.centroids = column_means(encoded, dim);
        c.members.emplace_back(n);
        std::iota(c.members[0].begin(), c.members[0].end(), 0);
        return c;
    }
    auto km = kmeans(encoded, dim, k, seed, kcfg);
    c.centroids = std::move(km.centroids);
    c.members.resize(k);
    for (std::size_t i = 0; i < n; ++i) {
        c.members[static_cast<std::size_t>(km.assignments[i])].push_back(i);
    }
    for (const auto& m : c.members) {
        if (m.empty()) {
            throw Error("k-means left an empty cluster after repair");
        }
    }
    return c;
}

ClusteredModel fit_on_clusters(const Dataset& train, const ContextEncoder& enc, const Clustering& c,
                               LeafFamily family, const FitConfig& cfg) {
    std::vector<LeafModel> models;
    models.reserve(c.members.size());
    for (const auto& rows : c.members) {
        models.push_back(fit_leaf(family, train, rows, cfg).model);
    }
    return ClusteredModel(family, enc, c.centroids, std::move(models));
}

void check_family(const Dataset& train, LeafFamily family) {
    if (payload_kind(family) != train.kind()) {
        throw Error("leaf family '" + std::string(to_string(family)) + "' does not match the dataset payload");
    }
    if (train.empty()) {
        throw Error("cannot fit on an empty dataset");
    }
}

} // namespace

ClusteredModel fit_context_free(const Dataset& train, LeafFamily family, const FitConfig& cfg) {
    return fit_clustered(train, 1, family, cfg, 0);
}

ClusteredModel fit_clustered(const Dataset& train, std::size_t k, LeafFamily family, const FitConfig& cfg,
                             std::uint64_t seed, const KMeansConfig& kcfg) {
    check_family(train, family);
    const auto enc = ContextEncoder::fit(train);
    if (enc.dim() == 0 && k > 1) {
        throw Error("k-means needs at least one context variable");
    }
    const auto encoded = enc.encode_all(train);
    const auto c = cluster_rows(encoded, enc.dim(), train.size(), k, seed, kcfg);
    return fit_on_clusters(train, enc, c, family, cfg);
}

std::vector<TuneResult> tune_k_multi(const Dataset& train, const Dataset& validation, std::size_t k_max,
                                     std::span<const LeafFamily> families, const FitConfig& cfg,
                                     std::uint64_t seed, const KMeansConfig& kcfg, int workers) {
    if (k_max < 1) {
        throw Error("k_max must be at least 1");
    }
    if (families.empty()) {
        throw Error("tune_k needs at least one family");
    }
    for (auto f : families) {
        check_family(train, f);
    }
    const auto enc = ContextEncoder::fit(train);
    const auto encoded = enc.encode_all(train);
    if (enc.dim() == 0) {
        k_max = 1;
    } else {
        // K beyond the number of distinct contexts is not fittable; the grid stops there.
        k_max = std::min(k_max, distinct_rows(encoded, enc.dim(), k_max));
    }

    // fits[k-1][f]
    std::vector<std::vector<ClusteredModel>> fits(k_max);
    std::vector<std::vector<double>> losses(k_max);
    run_batched(k_max, static_cast<std::size_t>(std::max(workers, 1)), [&](std::size_t i) {
        const std::size_t k = i + 1;
        const auto c = cluster_rows(encoded, enc.dim(), train.size(), k, derive_key(seed, k), kcfg);
        for (auto f : families) {
            fits[i].push_back(fit_on_clusters(train, enc, c, f, cfg));
            losses[i].push_back(fits[i].back().mean_loss(validation));
        }
    });

    std::vector<TuneResult> out;
    for (std::size_t f = 0; f < families.size(); ++f) {
        TuneResult tr;
        std::size_t best = 0;
        for (std::size_t i = 0; i < k_max; ++i) {
            tr.validation_loss.push_back(losses[i][f]);
            if (losses[i][f] < losses[best][f]) {
                best = i;
            }
        }
        tr.selected_k = best + 1;
        tr.model = fits[best][f];
        out.push_back(std::move(tr));
    }
    return out;
}

TuneResult tune_k(const Dataset& train, const Dataset& validation, std::size_t k_max, LeafFamily family,
                  const FitConfig& cfg, std::uint64_t seed, const KMeansConfig& kcfg, int workers) {
    const LeafFamily fams[] = {family};
    return std::move(tune_k_multi(train, validation, k_max, fams, cfg, seed, kcfg, workers).front());
}

// ---------------------------------------------------------------- mstkm-v1

json clustered_to_json(const ClusteredModel& model) {
    json models = json::array();
    for (const auto& m : model.models()) {
        models.push_back(model_to_json(m));
    }
    return {{"format", kClusteredFormat},
            {"family", to_string(model.family())},
            {"k", model.k()},
            {"schema", schema_to_json(model.encoder().schema())},
            {"encoder", {{"means", model.encoder().means()}, {"scales", model.encoder().scales()}}},
            {"dim", model.encoder().dim()},
            {"centroids", model.centroids()},
            {"models", std::move(models)}};
}

ClusteredModel clustered_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != kClusteredFormat) {
            throw DecodeError("expected a " + std::string(kClusteredFormat) + " document");
        }
        const auto family = parse_leaf_family(j.at("family").get<std::string>());
        ContextEncoder enc(schema_from_json(j.at("schema")), j.at("encoder").at("means").get<std::vector<double>>(),
                           j.at("encoder").at("scales").get<std::vector<double>>());
        if (j.at("dim").get<std::size_t>() != enc.dim()) {
            throw DecodeError("encoder dimension mismatch");
        }
        std::vector<LeafModel> models;
        for (const auto& jm : j.at("models")) {
            models.push_back(model_from_json(jm));
        }
        if (j.at("k").get<std::size_t>() != models.size()) {
            throw DecodeError("cluster count mismatch");
        }
        return ClusteredModel(family, std::move(enc), j.at("centroids").get<std::vector<double>>(),
                              std::move(models));
    } catch (const json::exception& e) {
        throw DecodeError(std::string("malformed mstkm-v1 document: ") + e.what());
    } catch (const DecodeError&) {
        throw;
    } catch (const Error& e) {
        throw DecodeError(std::string("invalid mstkm-v1 document: ") + e.what());
    }
}

std::string serialize_clustered(const ClusteredModel& model) { return clustered_to_json(model).dump(1) + "\n"; }

ClusteredModel deserialize_clustered(std::string_view document) {
    return clustered_from_json(parse_document(document, kClusteredFormat));
}

} // namespace mst
