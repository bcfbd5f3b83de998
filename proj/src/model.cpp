#include "dgx/model.hpp"

#include "dgx/rng.hpp"

#include <cmath>
#include <sstream>

namespace dgx {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::identity: return "identity";
    }
    return "relu";
}

std::string_view to_string(HeadKind k) {
    return k == HeadKind::link_prediction ? "link_prediction" : "node_regression";
}

std::string_view to_string(RegressionMode m) { return m == RegressionMode::linear ? "linear" : "softmax"; }

Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "identity") return Activation::identity;
    throw ValidationError("unknown activation '" + std::string(s) + "' (expected relu, tanh, identity)");
}

HeadKind parse_head_kind(std::string_view s) {
    if (s == "link_prediction" || s == "link") return HeadKind::link_prediction;
    if (s == "node_regression" || s == "regression") return HeadKind::node_regression;
    throw ValidationError("unknown task '" + std::string(s) + "' (expected link, regression)");
}

RegressionMode parse_regression_mode(std::string_view s) {
    if (s == "linear") return RegressionMode::linear;
    if (s == "softmax") return RegressionMode::softmax;
    throw ValidationError("unknown regression mode '" + std::string(s) + "' (expected linear, softmax)");
}

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::tanh: return std::tanh(x);
        case Activation::identity: return x;
    }
    return x;
}

namespace {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    Matrix m(rows, cols);
    // Row-major fill order keeps the draw sequence independent of storage order.
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = rng.uniform(-scale, scale);
        }
    }
    return m;
}

Vector uniform_vector(Rng& rng, Eigen::Index size, double scale) {
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        v(i) = rng.uniform(-scale, scale);
    }
    return v;
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << name << " has shape " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
        throw ValidationError(os.str());
    }
}

void require_size(const Vector& v, Eigen::Index size, const std::string& name) {
    if (v.size() != size) {
        throw ValidationError(name + " has size " + std::to_string(v.size()) + ", expected " + std::to_string(size));
    }
}

void require_finite(const Vector& v, const char* name) {
    if (!v.allFinite()) {
        throw ValidationError(std::string("gru_cell_forward: ") + name + " contains non-finite entries");
    }
}

Eigen::Index head_input_width(HeadKind kind, Eigen::Index hidden) {
    return kind == HeadKind::link_prediction ? 2 * hidden : hidden;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
    if (config.gcn_dims.empty()) {
        throw ValidationError("model needs at least one GCN layer");
    }
    Rng rng(seed);
    ModelParams p;
    p.init_seed = seed;
    p.gcn.activation = config.gcn_activation;
    auto in = static_cast<Eigen::Index>(config.input_dim);
    for (std::size_t width : config.gcn_dims) {
        const auto out = static_cast<Eigen::Index>(width);
        p.gcn.weights.push_back(uniform_matrix(rng, in, out, 1.0 / std::sqrt(static_cast<double>(in))));
        in = out;
    }
    const auto h = static_cast<Eigen::Index>(config.gru_hidden);
    const double s_in = 1.0 / std::sqrt(static_cast<double>(in));
    const double s_h = 1.0 / std::sqrt(static_cast<double>(h));
    GruParams& g = p.gru;
    g.w_ir = uniform_matrix(rng, h, in, s_in);
    g.w_iz = uniform_matrix(rng, h, in, s_in);
    g.w_in = uniform_matrix(rng, h, in, s_in);
    g.w_hr = uniform_matrix(rng, h, h, s_h);
    g.w_hz = uniform_matrix(rng, h, h, s_h);
    g.w_hn = uniform_matrix(rng, h, h, s_h);
    g.b_ir = uniform_vector(rng, h, s_in);
    g.b_hr = uniform_vector(rng, h, s_h);
    g.b_iz = uniform_vector(rng, h, s_in);
    g.b_hz = uniform_vector(rng, h, s_h);
    g.b_in = uniform_vector(rng, h, s_in);
    g.b_hn = uniform_vector(rng, h, s_h);

    HeadParams& head = p.head;
    head.kind = config.head_kind;
    head.mode = config.regression_mode;
    const Eigen::Index head_in = head_input_width(config.head_kind, h);
    const auto hidden = static_cast<Eigen::Index>(config.head_hidden);
    head.w1 = uniform_matrix(rng, hidden, head_in, 1.0 / std::sqrt(static_cast<double>(head_in)));
    head.b1 = uniform_vector(rng, hidden, 1.0 / std::sqrt(static_cast<double>(head_in)));
    head.w2 = uniform_matrix(rng, 1, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
    head.b2 = uniform_vector(rng, 1, 1.0 / std::sqrt(static_cast<double>(hidden)));
    return p;
}

ModelParams zero_params(const ModelConfig& config) {
    ModelParams p = init_params(config, 0);
    for (TensorView t : tensors(p)) {
        std::fill(t.data, t.data + t.size(), 0.0);
    }
    return p;
}

void validate_params(const ModelParams& params) {
    const auto& w = params.gcn.weights;
    if (w.empty()) {
        throw ValidationError("GcnParams: at least one layer required");
    }
    for (std::size_t l = 1; l < w.size(); ++l) {
        if (w[l].rows() != w[l - 1].cols()) {
            throw ValidationError("GcnParams: layer " + std::to_string(l) + " expects input width " +
                                  std::to_string(w[l].rows()) + " but layer " + std::to_string(l - 1) +
                                  " outputs " + std::to_string(w[l - 1].cols()));
        }
    }
    const GruParams& g = params.gru;
    const Eigen::Index h = g.w_hr.rows();
    const Eigen::Index in = w.back().cols();
    require_shape(g.w_ir, h, in, "gru.w_ir");
    require_shape(g.w_iz, h, in, "gru.w_iz");
    require_shape(g.w_in, h, in, "gru.w_in");
    require_shape(g.w_hr, h, h, "gru.w_hr");
    require_shape(g.w_hz, h, h, "gru.w_hz");
    require_shape(g.w_hn, h, h, "gru.w_hn");
    require_size(g.b_ir, h, "gru.b_ir");
    require_size(g.b_hr, h, "gru.b_hr");
    require_size(g.b_iz, h, "gru.b_iz");
    require_size(g.b_hz, h, "gru.b_hz");
    require_size(g.b_in, h, "gru.b_in");
    require_size(g.b_hn, h, "gru.b_hn");
    const HeadParams& head = params.head;
    const Eigen::Index hidden = head.w1.rows();
    require_shape(head.w1, hidden, head_input_width(head.kind, h), "head.w1");
    require_size(head.b1, hidden, "head.b1");
    require_shape(head.w2, 1, hidden, "head.w2");
    require_size(head.b2, 1, "head.b2");
}

namespace {

template <class Params, class View, class Fn>
std::vector<View> collect(Params& p, Fn make) {
    std::vector<View> out;
    for (std::size_t l = 0; l < p.gcn.weights.size(); ++l) {
        out.push_back(make("gcn.w" + std::to_string(l), p.gcn.weights[l]));
    }
    out.push_back(make("gru.w_ir", p.gru.w_ir));
    out.push_back(make("gru.w_iz", p.gru.w_iz));
    out.push_back(make("gru.w_in", p.gru.w_in));
    out.push_back(make("gru.w_hr", p.gru.w_hr));
    out.push_back(make("gru.w_hz", p.gru.w_hz));
    out.push_back(make("gru.w_hn", p.gru.w_hn));
    out.push_back(make("gru.b_ir", p.gru.b_ir));
    out.push_back(make("gru.b_hr", p.gru.b_hr));
    out.push_back(make("gru.b_iz", p.gru.b_iz));
    out.push_back(make("gru.b_hz", p.gru.b_hz));
    out.push_back(make("gru.b_in", p.gru.b_in));
    out.push_back(make("gru.b_hn", p.gru.b_hn));
    out.push_back(make("head.w1", p.head.w1));
    out.push_back(make("head.b1", p.head.b1));
    out.push_back(make("head.w2", p.head.w2));
    out.push_back(make("head.b2", p.head.b2));
    return out;
}

}  // namespace

std::vector<TensorView> tensors(ModelParams& params) {
    return collect<ModelParams, TensorView>(params, [](std::string name, auto& m) {
        return TensorView{std::move(name), m.data(), m.rows(), m.cols()};
    });
}

std::vector<ConstTensorView> tensors(const ModelParams& params) {
    return collect<const ModelParams, ConstTensorView>(params, [](std::string name, const auto& m) {
        return ConstTensorView{std::move(name), m.data(), m.rows(), m.cols()};
    });
}

GcnTrace gcn_forward(const NormalizedAdjacency& v, const Matrix& x, const GcnParams& params) {
    if (v.matrix.rows() != v.matrix.cols() || v.matrix.rows() != x.rows()) {
        throw ValidationError("gcn_forward: adjacency is " + std::to_string(v.matrix.rows()) + "x" +
                              std::to_string(v.matrix.cols()) + " but features have " + std::to_string(x.rows()) +
                              " rows");
    }
    GcnTrace trace;
    trace.features.reserve(params.weights.size() + 1);
    trace.features.push_back(x);
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const Matrix& f = trace.features.back();
        const Matrix& w = params.weights[l];
        if (w.rows() != f.cols()) {
            throw ValidationError("gcn_forward: layer " + std::to_string(l) + " weight has " +
                                  std::to_string(w.rows()) + " rows but input width is " + std::to_string(f.cols()));
        }
        Matrix p = v.matrix * f;
        Matrix s = p * w;
        Matrix next = s.unaryExpr([a = params.activation](double z) { return apply_activation(a, z); });
        trace.propagated.push_back(std::move(p));
        trace.pre_activations.push_back(std::move(s));
        trace.features.push_back(std::move(next));
    }
    return trace;
}

GruCellOutput gru_cell_forward(const Vector& x_hat, const Vector& h_prev, const GruParams& params) {
    require_finite(x_hat, "x_hat");
    require_finite(h_prev, "h_prev");
    if (x_hat.size() != params.input_size() || h_prev.size() != params.hidden_size()) {
        throw ValidationError("gru_cell_forward: input sizes " + std::to_string(x_hat.size()) + "/" +
                              std::to_string(h_prev.size()) + " do not match cell " +
                              std::to_string(params.input_size()) + "/" + std::to_string(params.hidden_size()));
    }
    GruStepTrace t;
    t.x_hat = x_hat;
    t.h_prev = h_prev;
    const Vector a_r = params.w_ir * x_hat + params.b_ir + params.w_hr * h_prev + params.b_hr;
    const Vector a_z = params.w_iz * x_hat + params.b_iz + params.w_hz * h_prev + params.b_hz;
    t.r = a_r.unaryExpr(&sigmoid);
    t.z = a_z.unaryExpr(&sigmoid);
    t.hn = params.w_hn * h_prev + params.b_hn;
    t.n1 = params.w_in * x_hat;
    t.n2 = t.r.cwiseProduct(params.w_hn * h_prev);
    t.b_n = params.b_in + t.r.cwiseProduct(params.b_hn);
    const Vector a_n = params.w_in * x_hat + params.b_in + t.r.cwiseProduct(t.hn);
    t.n = a_n.array().tanh().matrix();
    t.h = (Vector::Ones(t.z.size()) - t.z).cwiseProduct(h_prev) + t.z.cwiseProduct(t.n);
    Vector h = t.h;
    return {std::move(h), std::move(t)};
}

EncoderTrace encode(const DynamicGraph& graph, const ModelParams& params) {
    validate_dynamic_graph(graph);
    validate_params(params);
    if (static_cast<Eigen::Index>(graph.num_features()) != params.gcn.weights.front().rows()) {
        throw ValidationError("model expects " + std::to_string(params.gcn.weights.front().rows()) +
                              " input features but graph has D=" + std::to_string(graph.num_features()));
    }
    const auto n = static_cast<Eigen::Index>(graph.num_nodes());
    const Eigen::Index h = params.gru.hidden_size();
    EncoderTrace enc;
    enc.final_hidden = Matrix::Zero(n, h);
    for (const Snapshot& s : graph.snapshots) {
        enc.adjacency.push_back(normalize_adjacency(s.adjacency));
        enc.gcn.push_back(gcn_forward(enc.adjacency.back(), s.features, params.gcn));
        const Matrix& x_hat = enc.gcn.back().features.back();
        auto& steps = enc.gru.steps.emplace_back();
        steps.reserve(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            GruCellOutput out = gru_cell_forward(x_hat.row(i).transpose(), enc.final_hidden.row(i).transpose(),
                                                 params.gru);
            enc.final_hidden.row(i) = out.h.transpose();
            steps.push_back(std::move(out.trace));
        }
    }
    return enc;
}

HeadTrace head_forward(const HeadParams& head, const Vector& raw_input) {
    if (raw_input.size() != head.input_size()) {
        throw ValidationError("head input has size " + std::to_string(raw_input.size()) + ", expected " +
                              std::to_string(head.input_size()));
    }
    HeadTrace t;
    t.raw_input = raw_input;
    if (head.kind == HeadKind::node_regression && head.mode == RegressionMode::softmax) {
        const double m = raw_input.maxCoeff();
        Vector e = (raw_input.array() - m).exp().matrix();
        t.input = e / e.sum();
    } else {
        t.input = raw_input;
    }
    t.hidden_pre = head.w1 * t.input + head.b1;
    t.hidden = t.hidden_pre.cwiseMax(0.0);
    t.output = (head.w2 * t.hidden)(0) + head.b2(0);
    t.probability = head.kind == HeadKind::link_prediction ? sigmoid(t.output) : 0.0;
    return t;
}

LinkOutput link_predict(const Vector& h_u, const Vector& h_v, const HeadParams& head) {
    if (head.kind != HeadKind::link_prediction) {
        throw ValidationError("link_predict requires a link_prediction head");
    }
    Vector in(h_u.size() + h_v.size());
    in << h_u, h_v;
    HeadTrace t = head_forward(head, in);
    return {t.output, t.probability, std::move(t)};
}

RegressionOutput node_regress(const Vector& h_u, const HeadParams& head) {
    if (head.kind != HeadKind::node_regression) {
        throw ValidationError("node_regress requires a node_regression head");
    }
    HeadTrace t = head_forward(head, h_u);
    return {t.output, std::move(t)};
}

void check_query(const Query& query, std::size_t num_nodes, HeadKind kind) {
    if (query.source >= num_nodes || (query.is_link && query.target >= num_nodes)) {
        throw ValidationError("query node index out of range (N=" + std::to_string(num_nodes) + ")");
    }
    if (query.is_link != (kind == HeadKind::link_prediction)) {
        throw ValidationError(std::string("query kind does not match head kind ") + std::string(to_string(kind)));
    }
}

Vector head_input(const EncoderTrace& encoder, const Query& query) {
    const Matrix& hid = encoder.final_hidden;
    if (!query.is_link) {
        return hid.row(static_cast<Eigen::Index>(query.source)).transpose();
    }
    Vector in(2 * hid.cols());
    in << hid.row(static_cast<Eigen::Index>(query.source)).transpose(),
        hid.row(static_cast<Eigen::Index>(query.target)).transpose();
    return in;
}

ForwardTrace model_forward(const DynamicGraph& graph, const ModelParams& params, const Query& query) {
    check_query(query, graph.num_nodes(), params.head.kind);
    ForwardTrace trace;
    trace.encoder = encode(graph, params);
    trace.query = query;
    trace.head = head_forward(params.head, head_input(trace.encoder, query));
    return trace;
}

double predict(const DynamicGraph& graph, const ModelParams& params, const Query& query) {
    return model_forward(graph, params, query).prediction();
}

}  // namespace dgx
