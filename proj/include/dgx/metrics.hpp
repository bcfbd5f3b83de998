#pragma once

#include "dgx/lrp.hpp"
#include "dgx/train.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dgx {

/// Min-max scaling to [0, 1]; a constant vector maps to all zeros.
Vector min_max_normalize(const Vector& scores);

/// Fraction of nodes whose min-max normalized score is strictly below `threshold`.
double sparsity(const Vector& scores, double threshold);

/// How a node is removed from the input when measuring fidelity.
enum class OcclusionMode { features, edges };
std::string_view to_string(OcclusionMode m);
OcclusionMode parse_occlusion_mode(std::string_view s);

/// Number of nodes occluded for a keep fraction: floor((1 - keep) * N).
std::size_t occlusion_count(std::size_t num_nodes, double keep_fraction);

/// Indices of the `count` highest scores; ties go to the lower index.
std::vector<std::size_t> top_nodes(const Vector& scores, std::size_t count);

/// Copy of `graph` with `nodes` zeroed at every timestep (feature rows, or incident edges).
DynamicGraph occlude_nodes(const DynamicGraph& graph, const std::vector<std::size_t>& nodes, OcclusionMode mode);

/// Which quantity a fidelity delta measures for a given query.
std::string fidelity_mode(const Query& query, std::optional<double> target);

/// |metric(original) - metric(occluded)| after occluding the top (1 - keep) fraction of nodes.
/// Regression with a target: absolute-error delta; regression without a target: prediction delta;
/// link: probability delta.
double fidelity(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                std::optional<double> target, const Vector& node_scores, double keep_fraction,
                OcclusionMode mode = OcclusionMode::features);

/// Monte Carlo mean of fidelity under uniformly random node scores.
double random_fidelity_baseline(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                                std::optional<double> target, double keep_fraction, int samples, std::uint64_t seed,
                                OcclusionMode mode = OcclusionMode::features);

using Explainer = std::function<RelevanceMap(const DynamicGraph&, const ModelParams&, const Query&)>;

/// Adds ceil(fraction * |E_t|) random new undirected edges per snapshot.
DynamicGraph add_random_edges(const DynamicGraph& graph, double fraction, std::uint64_t seed);

enum class StabilityDistance { l1, cosine };
std::string_view to_string(StabilityDistance d);
StabilityDistance parse_stability_distance(std::string_view s);

/// Mean over t of the distance between per-node scores before and after perturbation.
double stability(const Explainer& explainer, const DynamicGraph& graph, const ModelParams& params, const Query& query,
                 std::uint64_t perturb_seed, double fraction = 0.2, StabilityDistance distance = StabilityDistance::l1);

/// Distance between two per-timestep score sequences.
double score_distance(const std::vector<Vector>& a, const std::vector<Vector>& b, StabilityDistance distance);

/// Area under the ROC curve (ties counted as 1/2).
double auc(const std::vector<double>& scores, const std::vector<double>& labels);
double mae(const std::vector<double>& predictions, const std::vector<double>& targets);

struct TaskMetric {
    std::string name;  ///< "auc" or "mae"
    double value = 0.0;
};
TaskMetric task_metric(const DynamicGraph& graph, const ModelParams& params, const Task& task);

struct SweepConfig {
    std::vector<double> keep_fractions{0.9, 0.8, 0.7, 0.6, 0.5};
    std::vector<double> threshold_grid = default_threshold_grid();
    int perturb_seeds = 10;
    double perturb_fraction = 0.2;
    int random_baseline_samples = 50;
    std::uint64_t seed = 0;
    OcclusionMode occlusion = OcclusionMode::features;
    StabilityDistance distance = StabilityDistance::l1;
    int threads = 1;

    static std::vector<double> default_threshold_grid();
};

void validate_sweep_config(const SweepConfig& config);

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct EvalReport {
    std::string method;
    std::vector<CurvePoint> fidelity_curve;         ///< (keep_fraction, delta)
    std::vector<CurvePoint> random_fidelity_curve;  ///< uniform-random ranking baseline
    std::vector<CurvePoint> sparsity_curve;         ///< (threshold, sparsity)
    double stability = 0.0;
    std::string fidelity_mode;
    std::optional<TaskMetric> task;
    std::size_t num_queries = 0;
    SweepConfig config;

    /// Trapezoid area under the fidelity curve over its keep fractions.
    [[nodiscard]] double fidelity_auc() const;
};

struct NamedExplainer {
    std::string name;
    Explainer explain;
};

/// Explained queries with optional per-query targets for fidelity.
struct QuerySet {
    std::vector<Query> queries;
    std::vector<std::optional<double>> targets;
};

std::vector<EvalReport> sweep(const std::vector<NamedExplainer>& explainers, const DynamicGraph& graph,
                              const ModelParams& params, const QuerySet& queries, const SweepConfig& config,
                              const Task* task = nullptr);

/// Runs fn(i) for i in [0, count) on up to `threads` workers; fn must only touch slot i.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace dgx
