#pragma once

#include "dgx/model.hpp"
#include "dgx/rng.hpp"

namespace fixture {

using dgx::Matrix;

inline dgx::DynamicGraph random_graph(dgx::Rng& rng, std::size_t n, std::size_t d, std::size_t steps,
                                      double edge_p = 0.4, double lo = -1.0, double hi = 1.0) {
    dgx::DynamicGraph g;
    for (std::size_t t = 0; t < steps; ++t) {
        Matrix a = Matrix::Zero(n, n);
        Matrix x(n, d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (rng.uniform() < edge_p) a(i, j) = a(j, i) = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < d; ++k) x(i, k) = rng.uniform(lo, hi);
        g.snapshots.push_back({a, x, static_cast<int>(t + 1)});
    }
    return g;
}

struct Instance {
    dgx::DynamicGraph graph;
    dgx::ModelParams params;
    dgx::Query query;
};

/// N <= 6, T <= 4, H <= 4; odd seeds are link tasks.
inline Instance small_instance(std::uint64_t seed, dgx::Activation act = dgx::Activation::relu) {
    dgx::Rng rng(seed * 7919 + 11);
    Instance in;
    const std::size_t n = 2 + rng.below(5);
    const std::size_t d = 1 + rng.below(3);
    const std::size_t steps = 1 + rng.below(4);
    in.graph = random_graph(rng, n, d, steps);
    dgx::ModelConfig mc;
    mc.input_dim = d;
    mc.gcn_dims = {2 + rng.below(3), 2 + rng.below(3)};
    mc.gru_hidden = 1 + rng.below(4);
    mc.head_hidden = 3 + rng.below(6);
    mc.gcn_activation = act;
    mc.head_kind = seed % 2 ? dgx::HeadKind::link_prediction : dgx::HeadKind::node_regression;
    in.params = dgx::init_params(mc, seed);
    in.query = seed % 2 ? dgx::Query::link(rng.below(n), rng.below(n)) : dgx::Query::node(rng.below(n));
    return in;
}

inline void zero_biases(dgx::ModelParams& p) {
    for (auto* b : {&p.gru.b_ir, &p.gru.b_hr, &p.gru.b_iz, &p.gru.b_hz, &p.gru.b_in, &p.gru.b_hn, &p.head.b1,
                    &p.head.b2})
        b->setZero();
}

}  // namespace fixture
