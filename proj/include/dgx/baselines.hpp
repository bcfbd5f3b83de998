#pragma once

#include "dgx/lrp.hpp"

namespace dgx {

/// Norm used to collapse a per-feature row into one node score.
enum class NodeNorm { l1, l2 };

/// Saliency maps share the RelevanceMap layout; `method` is "sa" or "gradinput".
using SaliencyMap = RelevanceMap;

/// SA: per_feature = |d prediction / d X_t|, per_node = row norm (L2 by default).
SaliencyMap sensitivity_analysis(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                                 NodeNorm norm = NodeNorm::l2);

/// Grad x Input: per_feature = (d prediction / d X_t) * X_t, per_node = row L1 of |.| by default.
SaliencyMap grad_times_input(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                             NodeNorm norm = NodeNorm::l1);

Vector row_norms(const Matrix& m, NodeNorm norm);

}  // namespace dgx
