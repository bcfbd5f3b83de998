#include "dgx/baselines.hpp"
#include "dgx/io.hpp"
#include "dgx/metrics.hpp"
#include "dgx/train.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace dgx;

namespace {

// A query is an int (node) or a (u, v) pair (link).
Query to_query(const py::object& q) {
    if (py::isinstance<py::int_>(q)) return Query::node(q.cast<std::size_t>());
    const auto pair = q.cast<std::pair<std::size_t, std::size_t>>();
    return Query::link(pair.first, pair.second);
}

py::object from_query(const Query& q) {
    if (q.is_link) return py::make_tuple(q.source, q.target);
    return py::int_(q.source);
}

DynamicGraph make_graph(const std::vector<std::pair<Matrix, Matrix>>& snapshots) {
    DynamicGraph g;
    int t = 1;
    for (const auto& [a, x] : snapshots) g.snapshots.push_back({a, x, t++});
    validate_dynamic_graph(g);
    return g;
}

std::vector<std::pair<Matrix, Matrix>> graph_snapshots(const DynamicGraph& g) {
    std::vector<std::pair<Matrix, Matrix>> out;
    for (const Snapshot& s : g.snapshots) out.emplace_back(s.adjacency, s.features);
    return out;
}

Matrix stack_rows(const std::vector<Vector>& rows) {
    if (rows.empty()) return {};
    Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t t = 0; t < rows.size(); ++t) m.row(static_cast<Eigen::Index>(t)) = rows[t].transpose();
    return m;
}

Explainer explainer_for(const std::string& method, const ExplainerConfig& config) {
    if (method == "dgx")
        return [config](const DynamicGraph& g, const ModelParams& p, const Query& q) { return explain(g, p, q, config); };
    if (method == "sa") return [](const DynamicGraph& g, const ModelParams& p, const Query& q) {
        return sensitivity_analysis(g, p, q);
    };
    if (method == "gradinput") return [](const DynamicGraph& g, const ModelParams& p, const Query& q) {
        return grad_times_input(g, p, q);
    };
    throw ValidationError("unknown method '" + method + "' (expected dgx, sa, gradinput)");
}

ExplainerConfig make_config(double epsilon, const std::string& stabilizer) {
    ExplainerConfig c{epsilon, parse_stabilizer_mode(stabilizer)};
    validate_config(c);
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Relevance explanations for GCN-GRU models on dynamic graphs";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def("normalize_adjacency", [](const Matrix& a) { return normalize_adjacency(a).matrix; }, py::arg("adjacency"),
          "D^-1/2 (A + I) D^-1/2 with D the degree of A + I.");

    py::class_<DynamicGraph>(m, "Graph")
        .def(py::init(&make_graph), py::arg("snapshots"), "Build from a list of (adjacency, features) pairs.")
        .def_property_readonly("num_nodes", &DynamicGraph::num_nodes)
        .def_property_readonly("num_features", &DynamicGraph::num_features)
        .def_property_readonly("num_steps", &DynamicGraph::num_steps)
        .def_property_readonly("snapshots", &graph_snapshots)
        .def("to_json", [](const DynamicGraph& g) { return graph_to_json(g).dump(); })
        .def("__repr__", [](const DynamicGraph& g) {
            return "Graph(num_nodes=" + std::to_string(g.num_nodes()) + ", num_steps=" +
                   std::to_string(g.num_steps()) + ", num_features=" + std::to_string(g.num_features()) + ")";
        });

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("graph", &Dataset::graph)
        .def_readonly("node_ids", &Dataset::node_ids)
        .def_property_readonly("task", [](const Dataset& d) { return std::string(to_string(d.task.kind)); })
        .def_property_readonly("queries",
                               [](const Dataset& d) {
                                   py::list out;
                                   for (const Query& q : d.task.queries()) out.append(from_query(q));
                                   return out;
                               })
        .def_property_readonly("labels", [](const Dataset& d) { return d.task.labels(); })
        .def("to_json", [](const Dataset& d) { return dataset_to_json(d).dump(); });

    m.def("load_dataset", &load_dataset, py::arg("path"), py::arg("seed") = 0,
          "Load graph.json, a sensor directory, or a .csv/.tsv temporal edge list.");

    m.def(
        "synth",
        [](std::size_t nodes, std::size_t features, std::size_t steps, std::vector<std::size_t> planted, double noise,
           std::uint64_t seed, std::size_t causal_step, double edge_probability) {
            SyntheticSpec s{nodes, features, steps, std::move(planted), noise, seed, causal_step, edge_probability};
            PlantedDataset p = generate_planted(s);
            py::dict truth;
            truth["planted"] = p.truth.planted;
            truth["causal_step"] = p.truth.causal_step;
            truth["query_node"] = p.truth.query_node;
            return py::make_tuple(std::move(p.dataset), truth);
        },
        py::arg("nodes") = 12, py::arg("features") = 2, py::arg("steps") = 4,
        py::arg("planted") = std::vector<std::size_t>{0}, py::arg("noise") = 0.0, py::arg("seed") = 0,
        py::arg("causal_step") = 0, py::arg("edge_probability") = 0.2,
        "Planted-cause benchmark. Returns (dataset, truth dict).");

    py::class_<ModelParams>(m, "Model")
        .def_static(
            "init",
            [](std::size_t input_dim, const std::string& head, std::vector<std::size_t> gcn_dims, std::size_t gru_hidden,
               std::size_t head_hidden, const std::string& activation, std::uint64_t seed) {
                ModelConfig c;
                c.input_dim = input_dim;
                c.head_kind = parse_head_kind(head);
                c.gcn_dims = std::move(gcn_dims);
                c.gru_hidden = gru_hidden;
                c.head_hidden = head_hidden;
                c.gcn_activation = parse_activation(activation);
                return init_params(c, seed);
            },
            py::arg("input_dim"), py::arg("head") = "link_prediction", py::arg("gcn_dims") = std::vector<std::size_t>{16, 16},
            py::arg("gru_hidden") = 16, py::arg("head_hidden") = 64, py::arg("activation") = "relu", py::arg("seed") = 0)
        .def_static("load", &load_params, py::arg("path"))
        .def_static("from_bytes", [](const py::bytes& b) { return decode_params(std::string(b)); })
        .def("save", [](const ModelParams& p, const std::filesystem::path& path) { save_params(p, path); })
        .def("to_bytes", [](const ModelParams& p) { return py::bytes(encode_params(p)); })
        .def_property_readonly("head", [](const ModelParams& p) { return std::string(to_string(p.head.kind)); })
        .def("tensors", [](const ModelParams& p) {
            py::dict out;
            for (const ConstTensorView& t : tensors(p))
                out[py::str(t.name)] = Matrix(Eigen::Map<const Matrix>(t.data, t.rows, t.cols));
            return out;
        });

    m.def(
        "train",
        [](const Dataset& d, int epochs, double lr, std::uint64_t seed, std::vector<std::size_t> gcn_dims,
           std::size_t gru_hidden, std::size_t head_hidden, const std::string& activation) {
            ModelConfig c;
            c.gcn_dims = std::move(gcn_dims);
            c.gru_hidden = gru_hidden;
            c.head_hidden = head_hidden;
            c.gcn_activation = parse_activation(activation);
            TrainConfig tc;
            tc.epochs = epochs;
            tc.learning_rate = lr;
            tc.seed = seed;
            py::gil_scoped_release release;
            TrainResult r = train(d.graph, d.task, c, tc);
            return std::make_pair(std::move(r.params), std::move(r.loss_history));
        },
        py::arg("dataset"), py::arg("epochs") = 100, py::arg("lr") = 0.01, py::arg("seed") = 0,
        py::arg("gcn_dims") = std::vector<std::size_t>{16, 16}, py::arg("gru_hidden") = 16,
        py::arg("head_hidden") = 64, py::arg("activation") = "relu",
        "Full-batch Adam. Returns (model, per-epoch losses).");

    m.def(
        "predict", [](const DynamicGraph& g, const ModelParams& p, const py::object& q) { return predict(g, p, to_query(q)); },
        py::arg("graph"), py::arg("model"), py::arg("query"));

    m.def(
        "input_gradient",
        [](const DynamicGraph& g, const ModelParams& p, const py::object& q) {
            return backward(model_forward(g, p, to_query(q)), p).d_input;
        },
        py::arg("graph"), py::arg("model"), py::arg("query"), "d prediction / d X_t for every t.");

    py::class_<RelevanceMap>(m, "Relevance")
        .def_readonly("method", &RelevanceMap::method)
        .def_readonly("per_feature", &RelevanceMap::per_feature)
        .def_property_readonly("per_node", [](const RelevanceMap& r) { return stack_rows(r.per_node); },
                               "T x N array of node scores.")
        .def_property_readonly("query", [](const RelevanceMap& r) { return from_query(r.query); })
        .def_readonly("seed_value", &RelevanceMap::seed_value)
        .def_readonly("seeded_relevance", &RelevanceMap::seeded_relevance)
        .def_readonly("head_absorbed", &RelevanceMap::head_absorbed)
        .def_readonly("bias_absorbed", &RelevanceMap::bias_absorbed)
        .def("node_totals", &RelevanceMap::node_totals)
        .def("to_json", [](const RelevanceMap& r) { return relevance_to_json(r).dump(); })
        .def("to_csv", &relevance_to_csv);

    m.def(
        "explain",
        [](const DynamicGraph& g, const ModelParams& p, const py::object& q, const std::string& method, double epsilon,
           const std::string& stabilizer) {
            return explainer_for(method, make_config(epsilon, stabilizer))(g, p, to_query(q));
        },
        py::arg("graph"), py::arg("model"), py::arg("query"), py::arg("method") = "dgx", py::arg("epsilon") = 1e-4,
        py::arg("stabilizer") = "sign_aware", "Relevance map by dgx (LRP-epsilon), sa or gradinput.");

    m.def("sparsity", &sparsity, py::arg("scores"), py::arg("threshold"));
    m.def(
        "fidelity",
        [](const DynamicGraph& g, const ModelParams& p, const py::object& q, const Vector& scores, double keep,
           std::optional<double> target, const std::string& occlusion) {
            return fidelity(g, p, to_query(q), target, scores, keep, parse_occlusion_mode(occlusion));
        },
        py::arg("graph"), py::arg("model"), py::arg("query"), py::arg("scores"), py::arg("keep_fraction"),
        py::arg("target") = py::none(), py::arg("occlusion") = "features");
    m.def(
        "stability",
        [](const DynamicGraph& g, const ModelParams& p, const py::object& q, const std::string& method,
           std::uint64_t seed, double fraction, const std::string& distance) {
            return stability(explainer_for(method, {}), g, p, to_query(q), seed, fraction,
                             parse_stability_distance(distance));
        },
        py::arg("graph"), py::arg("model"), py::arg("query"), py::arg("method") = "dgx", py::arg("seed") = 0,
        py::arg("fraction") = 0.2, py::arg("distance") = "l1");
    m.def("add_random_edges", &add_random_edges, py::arg("graph"), py::arg("fraction"), py::arg("seed"));
    m.def("auc", &auc, py::arg("scores"), py::arg("labels"));
    m.def("mae", &mae, py::arg("predictions"), py::arg("targets"));
}
