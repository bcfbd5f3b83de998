#include "dgx/lrp.hpp"

#include <cmath>

namespace dgx {

std::string_view to_string(StabilizerMode m) { return m == StabilizerMode::literal ? "literal" : "sign_aware"; }

StabilizerMode parse_stabilizer_mode(std::string_view s) {
    if (s == "literal") return StabilizerMode::literal;
    if (s == "sign_aware") return StabilizerMode::sign_aware;
    throw ValidationError("unknown stabilizer mode '" + std::string(s) + "' (expected literal, sign_aware)");
}

void validate_config(const ExplainerConfig& config) {
    if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon)) {
        throw ValidationError("epsilon must be a finite value > 0");
    }
}

double stabilize(double denominator, const ExplainerConfig& config) {
    if (config.stabilizer == StabilizerMode::literal) {
        return denominator + config.epsilon;
    }
    return denominator + (denominator >= 0.0 ? config.epsilon : -config.epsilon);
}

namespace {

Vector stabilized_ratio(const Vector& relevance, const Vector& denominators, const ExplainerConfig& config) {
    Vector s(relevance.size());
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        s(k) = relevance(k) / stabilize(denominators(k), config);
    }
    return s;
}

Matrix stabilized_ratio(const Matrix& relevance, const Matrix& denominators, const ExplainerConfig& config) {
    Matrix s(relevance.rows(), relevance.cols());
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            s(i, j) = relevance(i, j) / stabilize(denominators(i, j), config);
        }
    }
    return s;
}

void check_finite(const Vector& v, const char* tag) {
    if (!v.allFinite()) {
        throw NumericError(std::string("non-finite relevance in ") + tag);
    }
}

}  // namespace

Vector lrp_dense_eps(const Vector& activations, const Matrix& weights, const Vector& relevance_out, double epsilon,
                     StabilizerMode mode) {
    if (weights.rows() != activations.size() || weights.cols() != relevance_out.size()) {
        throw ValidationError("lrp_dense_eps: weights are " + std::to_string(weights.rows()) + "x" +
                              std::to_string(weights.cols()) + " but activations/relevance have sizes " +
                              std::to_string(activations.size()) + "/" + std::to_string(relevance_out.size()));
    }
    const ExplainerConfig config{epsilon, mode};
    validate_config(config);
    const Vector z = weights.transpose() * activations;
    const Vector s = stabilized_ratio(relevance_out, z, config);
    return activations.cwiseProduct(weights * s);
}

AffineRelevance lrp_affine_eps(const Vector& activations, const Matrix& weights, const Vector& bias,
                               const Vector& relevance_out, const ExplainerConfig& config) {
    if (weights.rows() != activations.size() || weights.cols() != relevance_out.size() ||
        bias.size() != relevance_out.size()) {
        throw ValidationError("lrp_affine_eps: shape mismatch");
    }
    validate_config(config);
    const Vector z = weights.transpose() * activations + bias;
    const Vector s = stabilized_ratio(relevance_out, z, config);
    return {activations.cwiseProduct(weights * s), bias.dot(s)};
}

HeadRelevance head_relevance(const ForwardTrace& trace, const HeadParams& head, const ExplainerConfig& config) {
    const HeadTrace& t = trace.head;
    if (t.hidden.size() != head.w1.rows() || t.input.size() != head.w1.cols()) {
        throw ValidationError("head_relevance: forward trace has no head activations for these parameters");
    }
    HeadRelevance out;
    out.seed_value = t.output;
    const Vector seed = Vector::Constant(1, t.output);
    const AffineRelevance top = lrp_affine_eps(t.hidden, head.w2.transpose(), head.b2, seed, config);
    // ReLU passes relevance through unchanged; zero units already received none.
    const AffineRelevance first = lrp_affine_eps(t.input, head.w1.transpose(), head.b1, top.relevance_in, config);
    out.absorbed = top.absorbed + first.absorbed;
    const Vector& r_in = first.relevance_in;
    check_finite(r_in, "head");
    if (trace.query.is_link) {
        const Eigen::Index h = r_in.size() / 2;
        out.source = r_in.head(h);
        out.target = r_in.tail(h);
    } else {
        out.source = r_in;
    }
    return out;
}

GruRelevanceStep gru_relevance_step(const GruStepTrace& step, const GruParams& params, const Vector& r_h,
                                    const ExplainerConfig& config) {
    validate_config(config);
    const Eigen::Index h = params.hidden_size();
    if (r_h.size() != h || step.h.size() != h || step.x_hat.size() != params.input_size()) {
        throw ValidationError("gru_relevance_step: relevance/trace sizes do not match the cell");
    }
    if (!r_h.allFinite()) {
        throw ValidationError("gru_relevance_step: incoming relevance is not finite");
    }
    GruRelevanceStep out;
    out.r_h = r_h;

    // h_t = (1 - z) * h_{t-1} + z * n, split proportionally to the two terms.
    const Vector s_h = stabilized_ratio(r_h, step.h, config);
    out.r_n = step.z.cwiseProduct(step.n).cwiseProduct(s_h);
    out.r_h_prev_from_h = (Vector::Ones(h) - step.z).cwiseProduct(step.h_prev).cwiseProduct(s_h);
    check_finite(out.r_n, "R_n (h_t split)");
    check_finite(out.r_h_prev_from_h, "R_{h_{t-1}<-h_t} (h_t split)");

    // Pre-activation of n is n1 + n2 + b_n; relevance is shared in that ratio.
    const Vector pre = step.n1 + step.n2 + step.b_n;
    const Vector s_n = stabilized_ratio(out.r_n, pre, config);
    out.r_n1 = step.n1.cwiseProduct(s_n);
    out.r_n2 = step.n2.cwiseProduct(s_n);
    out.r_bn = step.b_n.cwiseProduct(s_n);
    check_finite(out.r_n1, "R_n1 (n split)");
    check_finite(out.r_n2, "R_n2 (n split)");

    // n1 = W_in x_hat is the only path from x_hat.
    const Vector s_x = stabilized_ratio(out.r_n1, step.n1, config);
    out.r_x_hat = step.x_hat.cwiseProduct(params.w_in.transpose() * s_x);
    check_finite(out.r_x_hat, "R_x_hat (W_in rule)");

    // n2 = diag(r) W_hn h_{t-1}.
    const Vector s_hn = stabilized_ratio(out.r_n2, step.n2, config);
    out.r_h_prev_from_n = step.h_prev.cwiseProduct(params.w_hn.transpose() * step.r.cwiseProduct(s_hn));
    check_finite(out.r_h_prev_from_n, "R_{h_{t-1}<-n} (W_rn rule)");

    out.r_h_prev = out.r_h_prev_from_h + out.r_h_prev_from_n;
    return out;
}

Matrix gcn_relevance(const GcnTrace& trace, const GcnParams& params, const NormalizedAdjacency& v,
                     const Matrix& r_out, const ExplainerConfig& config) {
    validate_config(config);
    const std::size_t layers = params.weights.size();
    if (trace.features.size() != layers + 1 || trace.propagated.size() != layers) {
        throw ValidationError("gcn_relevance: trace has " + std::to_string(trace.propagated.size()) +
                              " layers, params have " + std::to_string(layers));
    }
    if (r_out.rows() != trace.features.back().rows() || r_out.cols() != trace.features.back().cols()) {
        throw ValidationError("gcn_relevance: relevance shape does not match F^(M) at l=" + std::to_string(layers));
    }
    Matrix r_f = r_out;
    for (std::size_t l = layers; l-- > 0;) {
        const Matrix& p = trace.propagated[l];
        const Matrix& f = trace.features[l];
        const Matrix& w = params.weights[l];
        if (p.cols() != w.rows() || r_f.cols() != w.cols() || v.matrix.cols() != f.rows()) {
            throw ValidationError("gcn_relevance: shape mismatch at l=" + std::to_string(l));
        }
        // Row k of P through W^(l).
        const Matrix s_w = stabilized_ratio(r_f, p * w, config);
        const Matrix r_p = p.cwiseProduct(s_w * w.transpose());
        // Column k of F through V.
        const Matrix s_v = stabilized_ratio(r_p, v.matrix * f, config);
        r_f = f.cwiseProduct(v.matrix.transpose() * s_v);
        if (!r_f.allFinite()) {
            throw NumericError("non-finite relevance in GCN layer l=" + std::to_string(l));
        }
    }
    return r_f;
}

Vector aggregate_node_relevance(const Matrix& per_feature) {
    if (!per_feature.allFinite()) {
        throw ValidationError("aggregate_node_relevance: non-finite input");
    }
    return per_feature.cwiseAbs().rowwise().sum();
}

Vector RelevanceMap::node_totals() const {
    if (per_node.empty()) {
        return {};
    }
    Vector total = Vector::Zero(per_node.front().size());
    for (const Vector& v : per_node) {
        total += v;
    }
    return total;
}

double RelevanceMap::signed_total() const {
    double s = 0.0;
    for (const Matrix& m : per_feature) {
        s += m.sum();
    }
    return s;
}

RelevanceMap explain_trace(const ForwardTrace& trace, const ModelParams& params, const ExplainerConfig& config) {
    validate_config(config);
    const EncoderTrace& enc = trace.encoder;
    const std::size_t steps = enc.gru.steps.size();
    const auto n = enc.final_hidden.rows();

    const HeadRelevance seed = head_relevance(trace, params.head, config);
    RelevanceMap map;
    map.method = "dgx";
    map.query = trace.query;
    map.config = config;
    map.seed_value = seed.seed_value;
    map.seeded_relevance = seed.total();
    map.head_absorbed = seed.absorbed;

    Matrix r_h = Matrix::Zero(n, params.gru.hidden_size());
    r_h.row(static_cast<Eigen::Index>(trace.query.source)) += seed.source.transpose();
    if (trace.query.is_link) {
        r_h.row(static_cast<Eigen::Index>(trace.query.target)) += seed.target.transpose();
    }

    map.per_feature.resize(steps);
    map.per_node.resize(steps);
    for (std::size_t t = steps; t-- > 0;) {
        Matrix r_xhat(n, params.gru.input_size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const GruRelevanceStep step =
                gru_relevance_step(enc.gru.steps[t][static_cast<std::size_t>(i)], params.gru, r_h.row(i).transpose(),
                                   config);
            r_xhat.row(i) = step.r_x_hat.transpose();
            r_h.row(i) = step.r_h_prev.transpose();
            map.bias_absorbed += step.r_bn.sum();
        }
        map.per_feature[t] = gcn_relevance(enc.gcn[t], params.gcn, enc.adjacency[t], r_xhat, config);
        map.per_node[t] = aggregate_node_relevance(map.per_feature[t]);
    }
    return map;
}

RelevanceMap explain(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                     const ExplainerConfig& config) {
    validate_config(config);
    return explain_trace(model_forward(graph, params, query), params, config);
}

}  // namespace dgx
