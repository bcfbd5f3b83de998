#pragma once

#include "dgx/graph.hpp"
#include "dgx/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dgx {

enum class Activation { relu, tanh, identity };
enum class HeadKind { link_prediction, node_regression };

/// Node-regression output mode. `softmax` normalizes h_T^u into a probability
/// vector before the MLP; `linear` feeds h_T^u directly.
enum class RegressionMode { linear, softmax };

std::string_view to_string(Activation a);
std::string_view to_string(HeadKind k);
std::string_view to_string(RegressionMode m);
Activation parse_activation(std::string_view s);
HeadKind parse_head_kind(std::string_view s);
RegressionMode parse_regression_mode(std::string_view s);

/// GCN weights W^(l) of shape D_l x D_{l+1}, shared across timesteps. No bias.
struct GcnParams {
    std::vector<Matrix> weights;
    Activation activation = Activation::relu;
};

/// GRU cell. Input weights are H x D_M, hidden weights H x H.
struct GruParams {
    Matrix w_ir, w_iz, w_in;
    Matrix w_hr, w_hz, w_hn;
    Vector b_ir, b_hr, b_iz, b_hz, b_in, b_hn;

    [[nodiscard]] Eigen::Index hidden_size() const { return w_hr.rows(); }
    [[nodiscard]] Eigen::Index input_size() const { return w_ir.cols(); }
};

/// Two-layer MLP head: out = w2 * relu(w1 * in + b1) + b2.
struct HeadParams {
    HeadKind kind = HeadKind::link_prediction;
    RegressionMode mode = RegressionMode::linear;
    Matrix w1;  ///< hidden x input
    Vector b1;
    Matrix w2;  ///< 1 x hidden
    Vector b2;  ///< size 1

    [[nodiscard]] Eigen::Index input_size() const { return w1.cols(); }
};

struct ModelParams {
    GcnParams gcn;
    GruParams gru;
    HeadParams head;
    std::uint64_t init_seed = 0;
};

struct ModelConfig {
    std::size_t input_dim = 2;
    std::vector<std::size_t> gcn_dims{16, 16};  ///< output width of each GCN layer
    std::size_t gru_hidden = 16;
    std::size_t head_hidden = 64;
    HeadKind head_kind = HeadKind::link_prediction;
    RegressionMode regression_mode = RegressionMode::linear;
    Activation gcn_activation = Activation::relu;
};

/// Uniform(-s, s) initialization with s = 1/sqrt(fan_in), deterministic per seed.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// All-zero parameters with the shapes implied by `config`.
ModelParams zero_params(const ModelConfig& config);

/// Checks the chained shapes of every parameter block.
void validate_params(const ModelParams& params);

/// Mutable/const views over every tensor in a fixed declaration order.
struct TensorView {
    std::string name;
    double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    [[nodiscard]] Eigen::Index size() const { return rows * cols; }
};
struct ConstTensorView {
    std::string name;
    const double* data;
    Eigen::Index rows;
    Eigen::Index cols;
    [[nodiscard]] Eigen::Index size() const { return rows * cols; }
};
std::vector<TensorView> tensors(ModelParams& params);
std::vector<ConstTensorView> tensors(const ModelParams& params);

/// The prediction being explained: a node (regression) or an ordered pair (link).
struct Query {
    std::size_t source = 0;
    std::size_t target = 0;
    bool is_link = false;

    static Query node(std::size_t u) { return {u, u, false}; }
    static Query link(std::size_t u, std::size_t v) { return {u, v, true}; }
    friend bool operator==(const Query&, const Query&) = default;
};

/// Cached GCN activations for one timestep.
struct GcnTrace {
    std::vector<Matrix> features;        ///< F^(0..M); F^(0) = X_t
    std::vector<Matrix> propagated;      ///< P^(l) = V F^(l), l = 0..M-1
    std::vector<Matrix> pre_activations; ///< P^(l) W^(l), l = 0..M-1
};

/// One GRU step for one node.
struct GruStepTrace {
    Vector x_hat;
    Vector h_prev;
    Vector r, z, n;
    Vector n1;       ///< W_in x_hat
    Vector n2;       ///< r * (W_hn h_prev)
    Vector b_n;      ///< b_in + r * b_hn
    Vector hn;       ///< W_hn h_prev + b_hn
    Vector h;
};

/// steps[t][i] for timestep t (0-based) and node i.
struct GruTrace {
    std::vector<std::vector<GruStepTrace>> steps;
};

struct HeadTrace {
    Vector raw_input;   ///< [h_u; h_v] or h_u
    Vector input;       ///< MLP input (softmax(raw_input) in softmax mode)
    Vector hidden_pre;
    Vector hidden;
    double output = 0.0;       ///< logit (link) or regression value
    double probability = 0.0;  ///< sigmoid(logit); unused for regression
};

/// GCN + GRU activations for the whole graph.
struct EncoderTrace {
    std::vector<NormalizedAdjacency> adjacency;
    std::vector<GcnTrace> gcn;
    GruTrace gru;
    Matrix final_hidden;  ///< N x H, row i = h_T^i
};

struct ForwardTrace {
    EncoderTrace encoder;
    Query query;
    HeadTrace head;

    /// Quantity seeded into explainers and differentiated by backward().
    [[nodiscard]] double prediction() const { return head.output; }
};

GcnTrace gcn_forward(const NormalizedAdjacency& v, const Matrix& x, const GcnParams& params);

struct GruCellOutput {
    Vector h;
    GruStepTrace trace;
};
GruCellOutput gru_cell_forward(const Vector& x_hat, const Vector& h_prev, const GruParams& params);

EncoderTrace encode(const DynamicGraph& graph, const ModelParams& params);

HeadTrace head_forward(const HeadParams& head, const Vector& raw_input);

struct LinkOutput {
    double logit;
    double probability;
    HeadTrace trace;
};
LinkOutput link_predict(const Vector& h_u, const Vector& h_v, const HeadParams& head);

struct RegressionOutput {
    double value;
    HeadTrace trace;
};
RegressionOutput node_regress(const Vector& h_u, const HeadParams& head);

/// Head input assembled from the encoder output for `query`.
Vector head_input(const EncoderTrace& encoder, const Query& query);

void check_query(const Query& query, std::size_t num_nodes, HeadKind kind);

ForwardTrace model_forward(const DynamicGraph& graph, const ModelParams& params, const Query& query);

/// Convenience: model_forward(...).prediction().
double predict(const DynamicGraph& graph, const ModelParams& params, const Query& query);

double apply_activation(Activation a, double x);

void save_params(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_params(const std::filesystem::path& path);

/// Weight-file encoding used by save_params/load_params.
std::string encode_params(const ModelParams& params);
ModelParams decode_params(std::string_view bytes);

}  // namespace dgx
