#include "dgx/bytes.hpp"
#include "dgx/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace dgx {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw FormatError(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

void expect_format(const json& j, std::string_view format) {
    const std::string got = field(j, "format").get<std::string>();
    if (got != format) {
        throw FormatError("expected format '" + std::string(format) + "', found '" + got + "'");
    }
    if (field(j, "version").get<int>() != 1) {
        throw FormatError("unsupported " + std::string(format) + " version");
    }
}

// Turns nlohmann type/range errors into FormatError.
template <class F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

json vector_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from(const json& a, Eigen::Index size) {
    if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != size) {
        throw FormatError("expected an array of " + std::to_string(size) + " numbers");
    }
    Vector v(size);
    for (Eigen::Index i = 0; i < size; ++i) v(i) = a[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

Matrix matrix_from(const json& a, Eigen::Index rows, Eigen::Index cols) {
    if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != rows) {
        throw FormatError("expected " + std::to_string(rows) + " rows");
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) m.row(i) = vector_from(a[static_cast<std::size_t>(i)], cols).transpose();
    return m;
}

json curve_json(const std::vector<CurvePoint>& c) {
    json a = json::array();
    for (const CurvePoint& p : c) a.push_back(json::array({p.x, p.y}));
    return a;
}

std::vector<CurvePoint> curve_from(const json& a) {
    std::vector<CurvePoint> out;
    for (const json& p : a) {
        if (!p.is_array() || p.size() != 2) throw FormatError("curve points must be [x, y] pairs");
        out.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return out;
}

// JSON has no NaN/inf; they are stored as null and rejected on read.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json graph_to_json(const DynamicGraph& graph) {
    validate_dynamic_graph(graph);
    json snaps = json::array();
    for (const Snapshot& s : graph.snapshots) {
        snaps.push_back({{"t", s.timestamp_index},
                         {"adjacency", encode_matrix_b64(s.adjacency)},
                         {"features", encode_matrix_b64(s.features)}});
    }
    return {{"format", "dgx-graph"},
            {"version", 1},
            {"num_nodes", graph.num_nodes()},
            {"num_features", graph.num_features()},
            {"num_steps", graph.num_steps()},
            {"encoding", "base64 f64 little-endian row-major"},
            {"snapshots", snaps}};
}

DynamicGraph graph_from_json(const json& j) {
    return guarded("graph", [&] {
        expect_format(j, "dgx-graph");
        const auto n = field(j, "num_nodes").get<Eigen::Index>();
        const auto d = field(j, "num_features").get<Eigen::Index>();
        const auto steps = field(j, "num_steps").get<std::size_t>();
        const json& snaps = field(j, "snapshots");
        if (!snaps.is_array() || snaps.size() != steps) {
            throw FormatError("num_steps does not match the snapshot list");
        }
        DynamicGraph g;
        for (const json& s : snaps) {
            g.snapshots.push_back({decode_matrix_b64(field(s, "adjacency").get<std::string>(), n, n),
                                   decode_matrix_b64(field(s, "features").get<std::string>(), n, d),
                                   field(s, "t").get<int>()});
        }
        return validate_dynamic_graph(g), g;
    });
}

json task_to_json(const Task& task) {
    json j = {{"kind", to_string(task.kind)}};
    if (task.kind == HeadKind::link_prediction) {
        json links = json::array();
        for (const LinkExample& e : task.links) links.push_back(json::array({e.source, e.target, e.label}));
        j["links"] = links;
    } else {
        j["nodes"] = task.nodes;
        j["targets"] = task.targets;
    }
    return j;
}

Task task_from_json(const json& j) {
    return guarded("task", [&] {
        Task t;
        t.kind = parse_head_kind(field(j, "kind").get<std::string>());
        if (t.kind == HeadKind::link_prediction) {
            for (const json& e : field(j, "links")) {
                if (!e.is_array() || e.size() != 3) throw FormatError("links entries must be [source, target, label]");
                t.links.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
            }
        } else {
            t.nodes = field(j, "nodes").get<std::vector<std::size_t>>();
            t.targets = field(j, "targets").get<std::vector<double>>();
        }
        return t;
    });
}

json dataset_to_json(const Dataset& dataset) {
    json j = graph_to_json(dataset.graph);
    validate_task(dataset.task, dataset.graph.num_nodes());
    j["task"] = task_to_json(dataset.task);
    if (!dataset.node_ids.empty()) j["node_ids"] = dataset.node_ids;
    return j;
}

Dataset dataset_from_json(const json& j) {
    Dataset d;
    d.graph = graph_from_json(j);
    d.task = task_from_json(guarded("dataset", [&] { return field(j, "task"); }));
    validate_task(d.task, d.graph.num_nodes());
    if (j.contains("node_ids")) {
        d.node_ids = guarded("dataset", [&] { return j.at("node_ids").get<std::vector<std::string>>(); });
        if (d.node_ids.size() != d.graph.num_nodes()) {
            throw FormatError("node_ids length does not match num_nodes");
        }
    }
    return d;
}

json truth_to_json(const GroundTruth& truth) {
    return {{"format", "dgx-truth"},
            {"version", 1},
            {"planted", truth.planted},
            {"causal_step", truth.causal_step},
            {"query_node", truth.query_node}};
}

GroundTruth truth_from_json(const json& j) {
    return guarded("truth", [&] {
        expect_format(j, "dgx-truth");
        return GroundTruth{field(j, "planted").get<std::vector<std::size_t>>(),
                           field(j, "causal_step").get<std::size_t>(), field(j, "query_node").get<std::size_t>()};
    });
}

json query_to_json(const Query& query) {
    if (query.is_link) return {{"kind", "link"}, {"source", query.source}, {"target", query.target}};
    return {{"kind", "node"}, {"node", query.source}};
}

Query query_from_json(const json& j) {
    return guarded("query", [&] {
        const std::string kind = field(j, "kind").get<std::string>();
        if (kind == "link") return Query::link(field(j, "source").get<std::size_t>(), field(j, "target").get<std::size_t>());
        if (kind == "node") return Query::node(field(j, "node").get<std::size_t>());
        throw FormatError("query kind must be 'node' or 'link', found '" + kind + "'");
    });
}

json relevance_to_json(const RelevanceMap& map) {
    const std::size_t steps = map.per_node.size();
    const Eigen::Index n = steps ? map.per_node.front().size() : 0;
    const Eigen::Index d = map.per_feature.empty() ? 0 : map.per_feature.front().cols();
    json per_node = json::array();
    json per_feature = json::array();
    for (std::size_t t = 0; t < steps; ++t) {
        per_node.push_back(vector_json(map.per_node[t]));
        per_feature.push_back(matrix_json(map.per_feature[t]));
    }
    return {{"format", "dgx-relevance"},
            {"version", 1},
            {"method", map.method},
            {"query", query_to_json(map.query)},
            {"epsilon", map.config.epsilon},
            {"stabilizer", to_string(map.config.stabilizer)},
            {"num_nodes", n},
            {"num_features", d},
            {"num_steps", steps},
            {"seed_value", finite_or_null(map.seed_value)},
            {"seeded_relevance", finite_or_null(map.seeded_relevance)},
            {"head_absorbed", finite_or_null(map.head_absorbed)},
            {"bias_absorbed", finite_or_null(map.bias_absorbed)},
            {"per_node", per_node},
            {"per_feature", per_feature}};
}

RelevanceMap relevance_from_json(const json& j) {
    return guarded("relevance", [&] {
        expect_format(j, "dgx-relevance");
        RelevanceMap m;
        m.method = field(j, "method").get<std::string>();
        m.query = query_from_json(field(j, "query"));
        m.config.epsilon = field(j, "epsilon").get<double>();
        m.config.stabilizer = parse_stabilizer_mode(field(j, "stabilizer").get<std::string>());
        m.seed_value = field(j, "seed_value").get<double>();
        m.seeded_relevance = field(j, "seeded_relevance").get<double>();
        m.head_absorbed = field(j, "head_absorbed").get<double>();
        m.bias_absorbed = field(j, "bias_absorbed").get<double>();
        const auto n = field(j, "num_nodes").get<Eigen::Index>();
        const auto d = field(j, "num_features").get<Eigen::Index>();
        const auto steps = field(j, "num_steps").get<std::size_t>();
        const json& nodes = field(j, "per_node");
        const json& feats = field(j, "per_feature");
        if (nodes.size() != steps || feats.size() != steps) {
            throw FormatError("relevance arrays do not match num_steps");
        }
        for (std::size_t t = 0; t < steps; ++t) {
            m.per_node.push_back(vector_from(nodes[t], n));
            m.per_feature.push_back(matrix_from(feats[t], n, d));
        }
        return m;
    });
}

std::string relevance_to_csv(const RelevanceMap& map) {
    std::string out = "t,node,score\n";
    for (std::size_t t = 0; t < map.per_node.size(); ++t) {
        for (Eigen::Index i = 0; i < map.per_node[t].size(); ++i) {
            out += std::to_string(t + 1) + "," + std::to_string(i) + "," + format_double(map.per_node[t](i)) + "\n";
        }
    }
    return out;
}

json report_to_json(const EvalReport& report) {
    const SweepConfig& c = report.config;
    json j = {{"format", "dgx-eval"},
              {"version", 1},
              {"method", report.method},
              {"fidelity_mode", report.fidelity_mode},
              {"num_queries", report.num_queries},
              {"fidelity", curve_json(report.fidelity_curve)},
              {"random_fidelity", curve_json(report.random_fidelity_curve)},
              {"sparsity", curve_json(report.sparsity_curve)},
              {"fidelity_auc", finite_or_null(report.fidelity_auc())},
              {"stability", finite_or_null(report.stability)},
              {"config",
               {{"keep_fractions", c.keep_fractions},
                {"threshold_grid", c.threshold_grid},
                {"perturb_seeds", c.perturb_seeds},
                {"perturb_fraction", c.perturb_fraction},
                {"random_baseline_samples", c.random_baseline_samples},
                {"seed", c.seed},
                {"occlusion", to_string(c.occlusion)},
                {"distance", to_string(c.distance)}}}};
    j["task_metric"] = report.task ? json{{"name", report.task->name}, {"value", finite_or_null(report.task->value)}}
                                   : json(nullptr);
    return j;
}

EvalReport report_from_json(const json& j) {
    return guarded("report", [&] {
        expect_format(j, "dgx-eval");
        EvalReport r;
        r.method = field(j, "method").get<std::string>();
        r.fidelity_mode = field(j, "fidelity_mode").get<std::string>();
        r.num_queries = field(j, "num_queries").get<std::size_t>();
        r.fidelity_curve = curve_from(field(j, "fidelity"));
        r.random_fidelity_curve = curve_from(field(j, "random_fidelity"));
        r.sparsity_curve = curve_from(field(j, "sparsity"));
        r.stability = field(j, "stability").get<double>();
        const json& c = field(j, "config");
        r.config.keep_fractions = field(c, "keep_fractions").get<std::vector<double>>();
        r.config.threshold_grid = field(c, "threshold_grid").get<std::vector<double>>();
        r.config.perturb_seeds = field(c, "perturb_seeds").get<int>();
        r.config.perturb_fraction = field(c, "perturb_fraction").get<double>();
        r.config.random_baseline_samples = field(c, "random_baseline_samples").get<int>();
        r.config.seed = field(c, "seed").get<std::uint64_t>();
        r.config.occlusion = parse_occlusion_mode(field(c, "occlusion").get<std::string>());
        r.config.distance = parse_stability_distance(field(c, "distance").get<std::string>());
        const json& t = field(j, "task_metric");
        if (!t.is_null()) r.task = TaskMetric{field(t, "name").get<std::string>(), field(t, "value").get<double>()};
        return r;
    });
}

std::string report_to_csv(const EvalReport& report) {
    std::string out = "method,curve,x,y\n";
    auto emit = [&](const char* curve, const std::vector<CurvePoint>& points) {
        for (const CurvePoint& p : points) {
            out += report.method + "," + curve + "," + format_double(p.x) + "," + format_double(p.y) + "\n";
        }
    };
    emit("fidelity", report.fidelity_curve);
    emit("random_fidelity", report.random_fidelity_curve);
    emit("sparsity", report.sparsity_curve);
    out += report.method + ",stability,," + format_double(report.stability) + "\n";
    return out;
}

json read_json_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw FormatError("missing file: " + path.string());
    }
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    write_file(path, j.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& path, std::uint64_t seed) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) {
        throw FormatError("missing dataset: " + path.string());
    }
    if (fs::is_directory(path)) {
        if (fs::exists(path / "graph.json")) {
            return dataset_from_json(read_json_file(path / "graph.json"));
        }
        if (fs::exists(path / "readings.csv")) {
            return make_regression_task(load_node_series(path / "adjacency.csv", path / "readings.csv"));
        }
        throw FormatError(path.string() + ": directory holds neither graph.json nor readings.csv");
    }
    const std::string ext = path.extension().string();
    if (ext == ".json") {
        return dataset_from_json(read_json_file(path));
    }
    if (ext == ".csv" || ext == ".tsv") {
        const TemporalEdgeList list = parse_temporal_edgelist(read_file(path));
        Dataset d = make_link_task(edgelist_to_graph(list, {}), seed);
        d.node_ids = list.vocabulary;
        return d;
    }
    throw FormatError(path.string() + ": unrecognized dataset type (expected directory, .json, .csv or .tsv)");
}

}  // namespace dgx
