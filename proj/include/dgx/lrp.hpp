#pragma once

#include "dgx/model.hpp"

#include <string>
#include <vector>

namespace dgx {

/// How epsilon enters a redistribution denominator z.
///   literal    : z + eps
///   sign_aware : z + eps * sign(z), sign(0) = +1
enum class StabilizerMode { literal, sign_aware };

std::string_view to_string(StabilizerMode m);
StabilizerMode parse_stabilizer_mode(std::string_view s);

struct ExplainerConfig {
    double epsilon = 1e-4;
    StabilizerMode stabilizer = StabilizerMode::sign_aware;
};

void validate_config(const ExplainerConfig& config);

/// Stabilized denominator according to the configured mode.
double stabilize(double denominator, const ExplainerConfig& config);

/// Epsilon-rule redistribution through a linear map out_k = sum_j W(j,k) a_j.
/// `weights` is indexed (input, output).
Vector lrp_dense_eps(const Vector& activations, const Matrix& weights, const Vector& relevance_out,
                     double epsilon, StabilizerMode mode = StabilizerMode::sign_aware);

/// Same rule for out_k = sum_j W(j,k) a_j + b_k; the bias share of each output's
/// relevance is absorbed and reported.
struct AffineRelevance {
    Vector relevance_in;
    double absorbed = 0.0;
};
AffineRelevance lrp_affine_eps(const Vector& activations, const Matrix& weights, const Vector& bias,
                               const Vector& relevance_out, const ExplainerConfig& config);

/// Relevance on h_T for the queried node(s), seeded with the head output.
struct HeadRelevance {
    Vector source;          ///< R over h_T^u
    Vector target;          ///< R over h_T^v (link queries only)
    double seed_value = 0;  ///< the head output (logit or regression value)
    double absorbed = 0;    ///< relevance taken by head biases
    [[nodiscard]] double total() const { return source.sum() + (target.size() ? target.sum() : 0.0); }
};
HeadRelevance head_relevance(const ForwardTrace& trace, const HeadParams& head, const ExplainerConfig& config);

/// Relevance flow through one GRU step of one node.
struct GruRelevanceStep {
    Vector r_h;               ///< incoming R over h_t
    Vector r_n;
    Vector r_n1, r_n2, r_bn;
    Vector r_x_hat;
    Vector r_h_prev_from_h;   ///< via (1 - z) * h_{t-1}
    Vector r_h_prev_from_n;   ///< via n2 = diag(r) W_hn h_{t-1}
    Vector r_h_prev;
};
GruRelevanceStep gru_relevance_step(const GruStepTrace& step, const GruParams& params, const Vector& r_h,
                                    const ExplainerConfig& config);

/// Relevance over X_t from relevance over F^(M)_t, through every GCN layer.
Matrix gcn_relevance(const GcnTrace& trace, const GcnParams& params, const NormalizedAdjacency& v,
                     const Matrix& r_out, const ExplainerConfig& config);

/// Row-wise L1: per_node(i) = sum_j |R(i,j)|.
Vector aggregate_node_relevance(const Matrix& per_feature);

/// Feature- and node-level scores for one explained prediction. Shared by
/// DGExplainer and the gradient baselines.
struct RelevanceMap {
    std::string method = "dgx";
    Query query;
    std::vector<Matrix> per_feature;  ///< one N x D matrix per t
    std::vector<Vector> per_node;     ///< one length-N vector per t
    double seed_value = 0.0;          ///< explained prediction
    double seeded_relevance = 0.0;    ///< total R over h_T after the head
    double head_absorbed = 0.0;       ///< relevance absorbed by head biases
    double bias_absorbed = 0.0;       ///< relevance absorbed by GRU b_n shares
    ExplainerConfig config;

    /// Per-node scores summed over timesteps.
    [[nodiscard]] Vector node_totals() const;
    /// Signed sum of every per-feature entry.
    [[nodiscard]] double signed_total() const;
};

RelevanceMap explain(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                     const ExplainerConfig& config = {});

/// Backward relevance pass over an existing forward trace.
RelevanceMap explain_trace(const ForwardTrace& trace, const ModelParams& params, const ExplainerConfig& config);

}  // namespace dgx
