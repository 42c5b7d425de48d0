#pragma once

#include "mst/dataset.hpp"

#include <cstddef>
#include <vector>

namespace mst {

/// Anything that maps a row to response probabilities: trees, clustered
/// benchmarks, context-free models and ground-truth oracles.
///
/// Choice rows yield [P(y=0), ..., P(y=H)]; auction rows yield [P(win)].
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual void predict(const Dataset& data, std::size_t row, std::vector<double>& out) const = 0;

    // Stateless base; lets derived classes default their own equality.
    bool operator==(const Predictor&) const = default;
};

} // namespace mst
