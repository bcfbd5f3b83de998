#include "dgx/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace dgx {

GradientBundle zero_gradients(const ModelParams& params, const EncoderTrace& encoder) {
    GradientBundle g;
    g.d_params = params;
    for (TensorView t : tensors(g.d_params)) {
        std::fill(t.data, t.data + t.size(), 0.0);
    }
    for (const GcnTrace& gcn : encoder.gcn) {
        g.d_input.push_back(Matrix::Zero(gcn.features.front().rows(), gcn.features.front().cols()));
    }
    return g;
}

Vector head_backward(const HeadParams& head, const HeadTrace& trace, double d_output, HeadParams& grads) {
    grads.b2(0) += d_output;
    grads.w2.noalias() += d_output * trace.hidden.transpose();
    Vector d_hidden = d_output * head.w2.row(0).transpose();
    Vector d_pre = d_hidden.cwiseProduct((trace.hidden_pre.array() > 0.0).cast<double>().matrix());
    grads.b1 += d_pre;
    grads.w1.noalias() += d_pre * trace.input.transpose();
    Vector d_input = head.w1.transpose() * d_pre;
    if (head.kind == HeadKind::node_regression && head.mode == RegressionMode::softmax) {
        // Softmax Jacobian: dp_i/dx_j = p_i (delta_ij - p_j).
        const Vector& p = trace.input;
        const double dot = p.dot(d_input);
        d_input = p.cwiseProduct(d_input - Vector::Constant(p.size(), dot));
    }
    return d_input;
}

namespace {

void gru_step_backward(const GruStepTrace& t, const GruParams& p, const Vector& d_h, GruParams& g, Vector& d_x,
                       Vector& d_h_prev) {
    const Eigen::Index h = t.h.size();
    const Vector ones = Vector::Ones(h);
    const Vector d_z = d_h.cwiseProduct(t.n - t.h_prev);
    const Vector d_n = d_h.cwiseProduct(t.z);
    d_h_prev = d_h.cwiseProduct(ones - t.z);

    const Vector d_an = d_n.cwiseProduct(ones - t.n.cwiseProduct(t.n));
    g.w_in.noalias() += d_an * t.x_hat.transpose();
    g.b_in += d_an;
    d_x = p.w_in.transpose() * d_an;

    const Vector d_r = d_an.cwiseProduct(t.hn);
    const Vector d_hn = d_an.cwiseProduct(t.r);
    g.w_hn.noalias() += d_hn * t.h_prev.transpose();
    g.b_hn += d_hn;
    d_h_prev.noalias() += p.w_hn.transpose() * d_hn;

    const Vector d_az = d_z.cwiseProduct(t.z.cwiseProduct(ones - t.z));
    g.w_iz.noalias() += d_az * t.x_hat.transpose();
    g.w_hz.noalias() += d_az * t.h_prev.transpose();
    g.b_iz += d_az;
    g.b_hz += d_az;
    d_x.noalias() += p.w_iz.transpose() * d_az;
    d_h_prev.noalias() += p.w_hz.transpose() * d_az;

    const Vector d_ar = d_r.cwiseProduct(t.r.cwiseProduct(ones - t.r));
    g.w_ir.noalias() += d_ar * t.x_hat.transpose();
    g.w_hr.noalias() += d_ar * t.h_prev.transpose();
    g.b_ir += d_ar;
    g.b_hr += d_ar;
    d_x.noalias() += p.w_ir.transpose() * d_ar;
    d_h_prev.noalias() += p.w_hr.transpose() * d_ar;
}

Matrix activation_derivative(Activation a, const Matrix& pre, const Matrix& post) {
    switch (a) {
        case Activation::relu: return (pre.array() > 0.0).cast<double>().matrix();
        case Activation::tanh: return (1.0 - post.array().square()).matrix();
        case Activation::identity: return Matrix::Ones(pre.rows(), pre.cols());
    }
    return Matrix::Ones(pre.rows(), pre.cols());
}

}  // namespace

void encoder_backward(const EncoderTrace& encoder, const ModelParams& params, const Matrix& d_final_hidden,
                      GradientBundle& grads) {
    const std::size_t steps = encoder.gru.steps.size();
    if (encoder.gcn.size() != steps || grads.d_input.size() != steps) {
        throw ValidationError("encoder_backward: trace has inconsistent step counts");
    }
    if (d_final_hidden.rows() != encoder.final_hidden.rows() || d_final_hidden.cols() != params.gru.hidden_size()) {
        throw ValidationError("encoder_backward: hidden gradient shape does not match trace/params");
    }
    const Eigen::Index n = d_final_hidden.rows();
    Matrix d_h = d_final_hidden;
    for (std::size_t t = steps; t-- > 0;) {
        const GcnTrace& gcn = encoder.gcn[t];
        Matrix d_xhat = Matrix::Zero(n, gcn.features.back().cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            const GruStepTrace& st = encoder.gru.steps[t][static_cast<std::size_t>(i)];
            if (st.h.size() != params.gru.hidden_size() || st.x_hat.size() != params.gru.input_size()) {
                throw ValidationError("encoder_backward: trace/params mismatch at t=" + std::to_string(t + 1));
            }
            Vector d_x, d_prev;
            gru_step_backward(st, params.gru, d_h.row(i).transpose(), grads.d_params.gru, d_x, d_prev);
            d_xhat.row(i) = d_x.transpose();
            d_h.row(i) = d_prev.transpose();
        }
        const Matrix& v = encoder.adjacency[t].matrix;
        Matrix d_f = std::move(d_xhat);
        for (std::size_t l = params.gcn.weights.size(); l-- > 0;) {
            const Matrix d_s = d_f.cwiseProduct(
                activation_derivative(params.gcn.activation, gcn.pre_activations[l], gcn.features[l + 1]));
            grads.d_params.gcn.weights[l].noalias() += gcn.propagated[l].transpose() * d_s;
            const Matrix d_p = d_s * params.gcn.weights[l].transpose();
            d_f = v.transpose() * d_p;
        }
        grads.d_input[t] += d_f;
    }
}

GradientBundle backward(const ForwardTrace& trace, const ModelParams& params, double seed_grad) {
    validate_params(params);
    if (trace.head.input.size() != params.head.input_size() ||
        trace.encoder.final_hidden.cols() != params.gru.hidden_size() ||
        (!trace.encoder.gcn.empty() && trace.encoder.gcn.front().features.size() != params.gcn.weights.size() + 1)) {
        throw ValidationError("backward: trace was not produced with these parameters");
    }
    GradientBundle grads = zero_gradients(params, trace.encoder);
    const Vector d_in = head_backward(params.head, trace.head, seed_grad, grads.d_params.head);
    Matrix d_hidden = Matrix::Zero(trace.encoder.final_hidden.rows(), trace.encoder.final_hidden.cols());
    const Eigen::Index h = d_hidden.cols();
    d_hidden.row(static_cast<Eigen::Index>(trace.query.source)) += d_in.head(h).transpose();
    if (trace.query.is_link) {
        d_hidden.row(static_cast<Eigen::Index>(trace.query.target)) += d_in.tail(h).transpose();
    }
    encoder_backward(trace.encoder, params, d_hidden, grads);
    return grads;
}

double central_difference(const std::function<double(double)>& f, double x, double step) {
    if (!(step > 0.0)) {
        throw ValidationError("finite difference step must be > 0");
    }
    const double hi = f(x + step);
    const double lo = f(x - step);
    if (!std::isfinite(hi) || !std::isfinite(lo)) {
        throw NumericError("finite difference probe produced a non-finite value");
    }
    return (hi - lo) / (2.0 * step);
}

GradientBundle finite_diff_gradient(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                                    double step) {
    if (!(step > 0.0)) {
        throw ValidationError("finite difference step must be > 0");
    }
    const ForwardTrace base = model_forward(graph, params, query);
    GradientBundle grads = zero_gradients(params, base.encoder);

    ModelParams probe = params;
    auto probe_views = tensors(probe);
    auto grad_views = tensors(grads.d_params);
    for (std::size_t k = 0; k < probe_views.size(); ++k) {
        for (Eigen::Index e = 0; e < probe_views[k].size(); ++e) {
            double& slot = probe_views[k].data[e];
            const double original = slot;
            grad_views[k].data[e] = central_difference(
                [&](double x) {
                    slot = x;
                    return predict(graph, probe, query);
                },
                original, step);
            slot = original;
        }
    }

    DynamicGraph g = graph;
    for (std::size_t t = 0; t < g.snapshots.size(); ++t) {
        Matrix& x = g.snapshots[t].features;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                const double original = x(i, j);
                grads.d_input[t](i, j) = central_difference(
                    [&](double v) {
                        x(i, j) = v;
                        return predict(g, params, query);
                    },
                    original, step);
                x(i, j) = original;
            }
        }
    }
    return grads;
}

double max_relative_error(const GradientBundle& analytic, const GradientBundle& reference, double floor) {
    double worst = 0.0;
    auto a = tensors(analytic.d_params);
    auto b = tensors(reference.d_params);
    for (std::size_t k = 0; k < a.size(); ++k) {
        for (Eigen::Index e = 0; e < a[k].size(); ++e) {
            worst = std::max(worst, std::abs(a[k].data[e] - b[k].data[e]) / (std::abs(b[k].data[e]) + floor));
        }
    }
    for (std::size_t t = 0; t < analytic.d_input.size(); ++t) {
        const Matrix diff = (analytic.d_input[t] - reference.d_input[t]).cwiseAbs();
        const Matrix denom = reference.d_input[t].cwiseAbs().array() + floor;
        worst = std::max(worst, (diff.array() / denom.array()).maxCoeff());
    }
    return worst;
}

}  // namespace dgx
