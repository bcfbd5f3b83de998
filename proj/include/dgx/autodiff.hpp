#pragma once

#include "dgx/model.hpp"

#include <functional>
#include <vector>

namespace dgx {

/// Gradients of a scalar with respect to every parameter and every input feature.
struct GradientBundle {
    ModelParams d_params;          ///< same shapes as the primal parameters
    std::vector<Matrix> d_input;   ///< d output / d X_t, one N x D matrix per t
};

/// Zero bundle shaped like (params, graph).
GradientBundle zero_gradients(const ModelParams& params, const EncoderTrace& encoder);

/// Head backward: accumulates head parameter gradients into `grads` and returns
/// d/d raw_input (i.e. w.r.t. [h_u; h_v] or h_u, before any softmax).
Vector head_backward(const HeadParams& head, const HeadTrace& trace, double d_output, HeadParams& grads);

/// Back-propagates d(scalar)/d(h_T) (N x H) through the GRU over time and the GCN
/// layers, accumulating into `grads`.
void encoder_backward(const EncoderTrace& encoder, const ModelParams& params, const Matrix& d_final_hidden,
                      GradientBundle& grads);

/// Exact reverse-mode gradient of seed_grad * prediction.
GradientBundle backward(const ForwardTrace& trace, const ModelParams& params, double seed_grad = 1.0);

/// Central differences of the prediction w.r.t. every parameter and input entry.
/// Costs two forward passes per coordinate; meant for tests.
GradientBundle finite_diff_gradient(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                                    double step);

/// Central difference of a scalar function at x.
double central_difference(const std::function<double(double)>& f, double x, double step);

/// Largest |a - b| / (|b| + floor) over every parameter and input coordinate.
double max_relative_error(const GradientBundle& analytic, const GradientBundle& reference, double floor = 1e-8);

}  // namespace dgx
