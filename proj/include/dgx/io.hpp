#pragma once

#include "dgx/graph.hpp"
#include "dgx/lrp.hpp"
#include "dgx/metrics.hpp"
#include "dgx/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dgx {

/// A dynamic graph together with its supervision.
struct Dataset {
    DynamicGraph graph;
    Task task;
    std::vector<std::string> node_ids;  ///< optional external ids, index = node
};

// ---------------------------------------------------------------------------
// Temporal edge lists

struct TemporalEdge {
    std::size_t source = 0;
    std::size_t target = 0;
    double timestamp = 0.0;
    double weight = 1.0;
};

struct TemporalEdgeList {
    std::vector<TemporalEdge> records;     ///< file order, ids mapped to dense indices
    std::vector<std::string> vocabulary;   ///< dense index -> original id (first-appearance order)
};

/// How records are bucketed into snapshots.
struct SnapshotRule {
    enum class Kind { count, window };
    Kind kind = Kind::count;
    double value = 4;  ///< number of snapshots (count) or window width in time units (window)
};

struct EdgeListOptions {
    SnapshotRule rule;
    bool weighted = false;  ///< sum duplicate edges instead of keeping a binary entry
    bool directed = false;  ///< keep direction; default symmetrizes
};

/// Parses "src,dst,t[,w]" (comma or tab separated, header required).
TemporalEdgeList parse_temporal_edgelist(std::string_view text);

/// Buckets edges into snapshots and attaches [normalized degree, 1.0] features.
DynamicGraph edgelist_to_graph(const TemporalEdgeList& list, const EdgeListOptions& options);

DynamicGraph load_temporal_edgelist(const std::filesystem::path& path, const EdgeListOptions& options = {});

/// [degree / max(1, N - 1), 1.0] for every node.
Matrix degree_features(const Matrix& adjacency);

/// Uses snapshots 1..T-1 as input and the edges of snapshot T as positive labels,
/// with an equal number of sampled non-edges as negatives.
Dataset make_link_task(const DynamicGraph& full, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Node series (static sensor graph + time-varying readings)

/// `adjacency_path`: "from,to[,cost]" edge list over sensor indices (header required).
/// `readings_path`: header "interval,<sensor>..." then one row of N readings per interval.
/// Readings are zero-mean normalized; X_t is N x 1.
DynamicGraph load_node_series(const std::filesystem::path& adjacency_path, const std::filesystem::path& readings_path);

/// Uses intervals 1..T-1 as input and the readings of interval T as node targets.
Dataset make_regression_task(const DynamicGraph& full);

// ---------------------------------------------------------------------------
// Planted-cause generator

struct SyntheticSpec {
    std::size_t nodes = 12;
    std::size_t features = 2;
    std::size_t steps = 4;
    std::vector<std::size_t> planted{0};
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::size_t causal_step = 0;  ///< 1-based; 0 selects the last step
    double edge_probability = 0.2;
};

void validate_synthetic_spec(const SyntheticSpec& spec);

struct GroundTruth {
    std::vector<std::size_t> planted;
    std::size_t causal_step = 1;  ///< 1-based
    std::size_t query_node = 0;   ///< node whose prediction is explained
};

struct PlantedDataset {
    Dataset dataset;
    GroundTruth truth;
};

/// Node-regression benchmark whose targets depend only on the planted nodes'
/// features at the causal step: y_i = sum_p V(i,p) * sum_d X(p,d) + noise.
PlantedDataset generate_planted(const SyntheticSpec& spec);

/// Noise-free label function of the generator, evaluated on any graph with the same layout.
Vector planted_label_values(const DynamicGraph& graph, const GroundTruth& truth);

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json graph_to_json(const DynamicGraph& graph);
DynamicGraph graph_from_json(const nlohmann::json& j);

nlohmann::json task_to_json(const Task& task);
Task task_from_json(const nlohmann::json& j);

nlohmann::json dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const nlohmann::json& j);

nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);

nlohmann::json query_to_json(const Query& query);
Query query_from_json(const nlohmann::json& j);

nlohmann::json relevance_to_json(const RelevanceMap& map);
RelevanceMap relevance_from_json(const nlohmann::json& j);
/// "t,node,score" rows, t 1-based.
std::string relevance_to_csv(const RelevanceMap& map);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
/// "method,curve,x,y" rows for every curve point plus the stability scalar.
std::string report_to_csv(const EvalReport& report);

/// Loads graph.json, an adjacency.csv + readings.csv directory, or a .csv/.tsv edge list.
Dataset load_dataset(const std::filesystem::path& path, std::uint64_t seed = 0);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Pretty-printed JSON with a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace dgx
