#include "dgx/baselines.hpp"

#include "dgx/autodiff.hpp"

namespace dgx {

Vector row_norms(const Matrix& m, NodeNorm norm) {
    return norm == NodeNorm::l1 ? Vector(m.cwiseAbs().rowwise().sum()) : Vector(m.rowwise().norm());
}

namespace {

SaliencyMap from_gradients(const ForwardTrace& trace, const GradientBundle& grads, std::string method) {
    SaliencyMap map;
    map.method = std::move(method);
    map.query = trace.query;
    map.seed_value = trace.prediction();
    map.seeded_relevance = trace.prediction();
    map.per_feature = grads.d_input;
    return map;
}

}  // namespace

SaliencyMap sensitivity_analysis(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                                 NodeNorm norm) {
    const ForwardTrace trace = model_forward(graph, params, query);
    const GradientBundle grads = backward(trace, params);
    SaliencyMap map = from_gradients(trace, grads, "sa");
    for (std::size_t t = 0; t < map.per_feature.size(); ++t) {
        map.per_node.push_back(row_norms(map.per_feature[t], norm));
        map.per_feature[t] = map.per_feature[t].cwiseAbs();
    }
    return map;
}

SaliencyMap grad_times_input(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                             NodeNorm norm) {
    const ForwardTrace trace = model_forward(graph, params, query);
    const GradientBundle grads = backward(trace, params);
    SaliencyMap map = from_gradients(trace, grads, "gradinput");
    for (std::size_t t = 0; t < map.per_feature.size(); ++t) {
        map.per_feature[t] = map.per_feature[t].cwiseProduct(graph.snapshots[t].features);
        map.per_node.push_back(row_norms(map.per_feature[t], norm));
    }
    return map;
}

}  // namespace dgx
