#include "dgx/io.hpp"
#include "dgx/rng.hpp"

#include <algorithm>
#include <cmath>

namespace dgx {

void validate_synthetic_spec(const SyntheticSpec& spec) {
    if (spec.nodes == 0 || spec.features == 0 || spec.steps == 0) {
        throw ValidationError("synthetic spec needs nodes, features and steps >= 1");
    }
    if (spec.planted.empty()) {
        throw ValidationError("planted set must be non-empty");
    }
    for (std::size_t p : spec.planted) {
        if (p >= spec.nodes) {
            throw ValidationError("planted node " + std::to_string(p) + " out of range for N=" +
                                  std::to_string(spec.nodes));
        }
    }
    std::vector<std::size_t> sorted = spec.planted;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ValidationError("planted set has duplicate nodes");
    }
    if (spec.causal_step > spec.steps) {
        throw ValidationError("causal step " + std::to_string(spec.causal_step) + " exceeds T=" +
                              std::to_string(spec.steps));
    }
    if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) {
        throw ValidationError("noise must be finite and >= 0");
    }
    if (!(spec.edge_probability >= 0.0 && spec.edge_probability <= 1.0)) {
        throw ValidationError("edge probability must lie in [0, 1]");
    }
}

Vector planted_label_values(const DynamicGraph& graph, const GroundTruth& truth) {
    validate_dynamic_graph(graph);
    if (truth.causal_step < 1 || truth.causal_step > graph.num_steps()) {
        throw ValidationError("causal step out of range for the graph");
    }
    const Snapshot& s = graph.snapshots[truth.causal_step - 1];
    const Matrix v = normalize_adjacency(s.adjacency).matrix;
    Vector y = Vector::Zero(v.rows());
    for (std::size_t p : truth.planted) {
        const auto col = static_cast<Eigen::Index>(p);
        y += v.col(col) * s.features.row(col).sum();
    }
    return y;
}

PlantedDataset generate_planted(const SyntheticSpec& spec) {
    validate_synthetic_spec(spec);
    Rng rng(spec.seed);
    const auto n = static_cast<Eigen::Index>(spec.nodes);
    const auto d = static_cast<Eigen::Index>(spec.features);
    const std::size_t causal = spec.causal_step == 0 ? spec.steps : spec.causal_step;

    PlantedDataset out;
    out.truth.planted = spec.planted;
    out.truth.causal_step = causal;

    // Query node: a non-planted node wired to the first planted one.
    const std::size_t anchor = spec.planted.front();
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < spec.nodes; ++i) {
        if (std::find(spec.planted.begin(), spec.planted.end(), i) == spec.planted.end()) others.push_back(i);
    }
    out.truth.query_node = others.empty() ? anchor : others[rng.below(others.size())];

    DynamicGraph& g = out.dataset.graph;
    for (std::size_t t = 1; t <= spec.steps; ++t) {
        Matrix a = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                if (rng.uniform() < spec.edge_probability) {
                    a(i, j) = a(j, i) = 1.0;
                }
            }
        }
        Matrix x(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index k = 0; k < d; ++k) x(i, k) = rng.uniform(0.0, 0.2);
        }
        if (t == causal) {
            const auto q = static_cast<Eigen::Index>(out.truth.query_node);
            const auto p = static_cast<Eigen::Index>(anchor);
            if (p != q) a(p, q) = a(q, p) = 1.0;
            for (std::size_t planted : spec.planted) {
                for (Eigen::Index k = 0; k < d; ++k) x(static_cast<Eigen::Index>(planted), k) = rng.uniform(1.0, 2.0);
            }
        }
        g.snapshots.push_back({std::move(a), std::move(x), static_cast<int>(t)});
    }

    const Vector y = planted_label_values(g, out.truth);
    Task& task = out.dataset.task;
    task.kind = HeadKind::node_regression;
    for (Eigen::Index i = 0; i < n; ++i) {
        task.nodes.push_back(static_cast<std::size_t>(i));
        task.targets.push_back(y(i) + spec.noise * rng.uniform(-1.0, 1.0));
    }
    return out;
}

}  // namespace dgx
