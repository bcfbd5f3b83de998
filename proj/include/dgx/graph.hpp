#pragma once

#include "dgx/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dgx {

/// One timestep of a dynamic graph: adjacency A_t (N x N) and features X_t (N x D).
struct Snapshot {
    Matrix adjacency;
    Matrix features;
    int timestamp_index = 1;  ///< 1-based t.

    [[nodiscard]] std::size_t num_nodes() const { return static_cast<std::size_t>(adjacency.rows()); }
    [[nodiscard]] std::size_t num_features() const { return static_cast<std::size_t>(features.cols()); }
};

/// Ordered snapshot sequence over a fixed node set.
struct DynamicGraph {
    std::vector<Snapshot> snapshots;

    [[nodiscard]] std::size_t num_steps() const { return snapshots.size(); }
    [[nodiscard]] std::size_t num_nodes() const { return snapshots.empty() ? 0 : snapshots.front().num_nodes(); }
    [[nodiscard]] std::size_t num_features() const {
        return snapshots.empty() ? 0 : snapshots.front().num_features();
    }
};

/// V = D~^{-1/2} (A + I) D~^{-1/2} with D~(i,i) = 1 + sum_j A(i,j).
struct NormalizedAdjacency {
    Matrix matrix;
};

NormalizedAdjacency normalize_adjacency(const Matrix& adjacency);

/// Checks every Snapshot/DynamicGraph invariant and returns the graph unchanged.
const DynamicGraph& validate_dynamic_graph(const DynamicGraph& graph);

/// Subtracts the per-feature mean taken over all nodes and all timesteps.
std::vector<Matrix> zero_mean_normalize(std::span<const Matrix> series);

/// Number of undirected edges (i < j with A(i,j) != 0 or A(j,i) != 0).
std::size_t count_undirected_edges(const Matrix& adjacency);

}  // namespace dgx
