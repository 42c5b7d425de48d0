#pragma once

#include "mst/dataset.hpp"
#include "mst/leaf_models.hpp"
#include "mst/predictor.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mst {

inline constexpr std::string_view kClusteredFormat = "mstkm-v1";

struct KMeansConfig {
    std::size_t restarts = 10;
    std::size_t max_iterations = 300;
    /// When nonzero and smaller than the point count, centroids are learned on
    /// a seeded random subsample of this size; every point is then assigned.
    std::size_t sample_limit = 0;
};

struct KMeansResult {
    std::vector<int> assignments;
    /// K x dim, row-major.
    std::vector<double> centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    /// Inertia after each Lloyd iteration of the winning restart.
    std::vector<double> inertia_trace;
};

/// Lloyd's algorithm from k-means++ seeding, best of `restarts` by inertia.
/// `points` is n x dim row-major. Throws when k exceeds the distinct point count.
KMeansResult kmeans(std::span<const double> points, std::size_t dim, std::size_t k, std::uint64_t seed,
                    const KMeansConfig& cfg = {});

/// Index of the nearest centroid (lowest index on ties).
int nearest_centroid(std::span<const double> point, std::span<const double> centroids, std::size_t dim);

/// Standardizes numeric context variables and one-hot encodes categorical ones.
class ContextEncoder {
public:
    ContextEncoder() = default;
    ContextEncoder(ContextSchema schema, std::vector<double> means, std::vector<double> scales);
    static ContextEncoder fit(const Dataset& data);

    std::size_t dim() const { return dim_; }
    void encode(std::span<const double> context, std::span<double> out) const;
    std::vector<double> encode_all(const Dataset& data) const;

    const ContextSchema& schema() const { return schema_; }
    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& scales() const { return scales_; }

    bool operator==(const ContextEncoder&) const = default;

private:
    ContextSchema schema_;
    /// Per schema variable; unused (0 / 1) for categorical ones.
    std::vector<double> means_;
    std::vector<double> scales_;
    std::size_t dim_ = 0;
};

/// K-means segmentation with one response model per cluster (MNLKM, IRKM, LRKM;
/// K = 1 gives the context-free MNL, IR, LR and Const baselines).
class ClusteredModel final : public Predictor {
public:
    ClusteredModel() = default;
    ClusteredModel(LeafFamily family, ContextEncoder encoder, std::vector<double> centroids,
                   std::vector<LeafModel> models);

    LeafFamily family() const { return family_; }
    std::size_t k() const { return models_.size(); }
    const ContextEncoder& encoder() const { return encoder_; }
    const std::vector<double>& centroids() const { return centroids_; }
    const std::vector<LeafModel>& models() const { return models_; }

    int cluster_of(std::span<const double> context) const;
    void predict(const Dataset& data, std::size_t row, std::vector<double>& out) const override;
    /// Mean family loss (NLL for MNL, squared error otherwise) over `data`.
    double mean_loss(const Dataset& data) const;

    bool operator==(const ClusteredModel&) const = default;

private:
    LeafFamily family_ = LeafFamily::mnl;
    ContextEncoder encoder_;
    std::vector<double> centroids_;
    std::vector<LeafModel> models_;
};

/// One model of `family` over all rows, no clustering.
ClusteredModel fit_context_free(const Dataset& train, LeafFamily family, const FitConfig& cfg);

ClusteredModel fit_clustered(const Dataset& train, std::size_t k, LeafFamily family, const FitConfig& cfg,
                             std::uint64_t seed, const KMeansConfig& kcfg = {});

struct TuneResult {
    ClusteredModel model;
    std::size_t selected_k = 1;
    /// Validation mean family loss for K = 1..K_max (index K-1).
    std::vector<double> validation_loss;
};

/// Fits K = 1..k_max and keeps the lowest validation loss (smaller K on ties).
TuneResult tune_k(const Dataset& train, const Dataset& validation, std::size_t k_max, LeafFamily family,
                  const FitConfig& cfg, std::uint64_t seed, const KMeansConfig& kcfg = {}, int workers = 1);

/// tune_k for several families sharing one clustering per K.
std::vector<TuneResult> tune_k_multi(const Dataset& train, const Dataset& validation, std::size_t k_max,
                                     std::span<const LeafFamily> families, const FitConfig& cfg,
                                     std::uint64_t seed, const KMeansConfig& kcfg = {}, int workers = 1);

nlohmann::json clustered_to_json(const ClusteredModel& model);
ClusteredModel clustered_from_json(const nlohmann::json& j);
std::string serialize_clustered(const ClusteredModel& model);
ClusteredModel deserialize_clustered(std::string_view document);

} // namespace mst
