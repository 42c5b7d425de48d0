#pragma once

#include "mst/dataset.hpp"
#include "mst/leaf_models.hpp"
#include "mst/predictor.hpp"
#include "mst/tree.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mst {

enum class TruthVariant { context_free, cmt, kmeans_mixture, segmented_auction };

std::string_view to_string(TruthVariant v);
TruthVariant parse_truth_variant(std::string_view name);

/// Monotone win curve over log(bid): a blend of a shifted sigmoid and a
/// piecewise-linear ramp, mapped onto [floor, ceiling] and clipped to [0, 1].
struct WinCurve {
    double sigmoid_weight = 1.0;
    double center = 0.0;
    double scale = 1.0;
    double ramp_start = -1.0;
    double ramp_end = 1.0;
    double floor = 0.0;
    double ceiling = 1.0;

    double operator()(double bid) const;
    bool operator==(const WinCurve&) const = default;
};

/// Generative model with exact response probabilities.
class GroundTruth final : public Predictor {
public:
    TruthVariant variant = TruthVariant::context_free;
    /// context-free: one model; kmeans-mixture: one per cluster. (CMT leaves live in `router`.)
    std::vector<MnlParams> mnl;
    /// cmt: tree with MNL leaves; segmented-auction: routing-only tree (no leaf models).
    std::optional<Tree> router;
    std::vector<double> mixture_weights;
    std::vector<std::vector<double>> cluster_means;
    double sigma = 0.08;
    std::vector<WinCurve> curves;

    /// Choice variants: [P(y=0..H)]. Auctions: [P(win)]. For kmeans-mixture the
    /// row's latent cluster is used when recorded, unless `posterior_mixture`
    /// asks for the cluster-posterior-weighted mixture.
    void true_probs(const Dataset& data, std::size_t row, std::vector<double>& out,
                    bool posterior_mixture = false) const;
    void predict(const Dataset& data, std::size_t row, std::vector<double>& out) const override {
        true_probs(data, row, out, false);
    }
    /// Leaf / cluster / segment generating the row.
    int segment_of(const Dataset& data, std::size_t row) const;
    std::size_t segment_count() const;

    bool operator==(const GroundTruth&) const = default;
};

struct Generated {
    Dataset data;
    GroundTruth truth;
};

/// Dimensions shared by the choice generators.
struct ChoiceShape {
    std::size_t contexts = 4;
    std::size_t option_dim = 4;
    int min_options = 2;
    int max_options = 5;
};

struct AuctionShape {
    double bid_min = 0.1;
    double bid_max = 10.0;
};

Generated gen_context_free(std::uint64_t seed, std::size_t n, const ChoiceShape& shape = {});
Generated gen_cmt_truth(std::uint64_t seed, std::size_t n, const ChoiceShape& shape = {});
Generated gen_kmeans_truth(std::uint64_t seed, std::size_t n, double sigma = 0.08, const ChoiceShape& shape = {});
Generated gen_auctions(std::uint64_t seed, std::size_t n, std::size_t segments, const AuctionShape& shape = {});

/// Fraction of the parent region's context mass sent to each side, per split,
/// under the generator's context distribution (uniform numeric, uniform categorical).
std::vector<std::pair<double, double>> split_balance(const Tree& tree);

std::string truth_to_document(const GroundTruth& truth);
GroundTruth truth_from_document(std::string_view document);

} // namespace mst
