#include "cli.hpp"

#include "dgx/baselines.hpp"
#include "dgx/bytes.hpp"
#include "dgx/io.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#ifndef DGX_VERSION
#define DGX_VERSION "0.0.0"
#endif

namespace dgx {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsageExit = 2;
constexpr int kRuntimeExit = 1;

struct UsageError : Error {
    using Error::Error;
};

const std::vector<std::string> kMethods{"dgx", "sa", "gradinput"};

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

/// Collects everything a manifest records while a command runs.
class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)) {}

    json config = json::object();
    json seeds = json::object();

    void input(const fs::path& path) {
        if (fs::is_directory(path)) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(path)) {
                if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) input(f);
            return;
        }
        inputs_.push_back({{"path", path.generic_string()}, {"sha256", sha256_hex(read_file(path))}});
    }

    void output(const fs::path& dir, const std::string& name, std::string_view contents) {
        write_file(dir / name, contents);
        outputs_.insert(name);
    }

    void write(const fs::path& dir) const {
        json j = {{"tool", "dgx"},
                  {"version", DGX_VERSION},
                  {"command", command_},
                  {"config", config},
                  {"seeds", seeds},
                  {"inputs", inputs_},
                  {"outputs", outputs_}};
        write_json_file(dir / "manifest.json", j);
    }

private:
    std::string command_;
    json inputs_ = json::array();
    std::set<std::string> outputs_;
};

void prepare_out(const fs::path& out) {
    if (out.empty()) throw UsageError("--out is required");
    fs::create_directories(out);
}

int thread_cap() {
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("DGX_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) {
            throw UsageError(std::string("DGX_THREADS must be a positive integer, got '") + env + "'");
        }
        threads = std::min(threads, static_cast<int>(v));
    }
    return threads;
}

fs::path dataset_root(const fs::path& dataset) {
    return fs::is_directory(dataset) ? dataset : dataset.parent_path();
}

std::optional<GroundTruth> find_truth(const fs::path& dataset) {
    const fs::path p = dataset_root(dataset) / "truth.json";
    if (fs::is_directory(dataset) && fs::exists(p)) return truth_from_json(read_json_file(p));
    return std::nullopt;
}

Explainer make_explainer(const std::string& method, const ExplainerConfig& config) {
    if (method == "dgx") {
        return [config](const DynamicGraph& g, const ModelParams& p, const Query& q) { return explain(g, p, q, config); };
    }
    if (method == "sa") {
        return [](const DynamicGraph& g, const ModelParams& p, const Query& q) { return sensitivity_analysis(g, p, q); };
    }
    if (method == "gradinput") {
        return [](const DynamicGraph& g, const ModelParams& p, const Query& q) { return grad_times_input(g, p, q); };
    }
    throw UsageError("unknown method '" + method + "' (valid: dgx, sa, gradinput)");
}

std::optional<double> target_for(const Task& task, const Query& q) {
    if (q.is_link || task.kind != HeadKind::node_regression) return std::nullopt;
    for (std::size_t k = 0; k < task.nodes.size(); ++k) {
        if (task.nodes[k] == q.source) return task.targets[k];
    }
    return std::nullopt;
}

Query parse_query(const std::string& node, const std::string& link) {
    if (!node.empty() && !link.empty()) throw UsageError("--node and --link are mutually exclusive");
    auto index = [](const std::string& s) {
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size()) throw UsageError("bad node index '" + s + "'");
        return static_cast<std::size_t>(v);
    };
    if (!node.empty()) return Query::node(index(node));
    const auto comma = link.find(',');
    if (comma == std::string::npos) throw UsageError("--link expects u,v");
    return Query::link(index(link.substr(0, comma)), index(link.substr(comma + 1)));
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    SyntheticSpec spec;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    prepare_out(a.out);
    const PlantedDataset pd = generate_planted(a.spec);
    Manifest m("synth");
    m.config = {{"nodes", a.spec.nodes},
                {"features", a.spec.features},
                {"steps", a.spec.steps},
                {"planted", a.spec.planted},
                {"noise", a.spec.noise},
                {"causal_step", pd.truth.causal_step},
                {"edge_probability", a.spec.edge_probability}};
    m.seeds = {{"seed", a.spec.seed}};
    m.output(a.out, "graph.json", dataset_to_json(pd.dataset).dump(2) + "\n");
    m.output(a.out, "truth.json", truth_to_json(pd.truth).dump(2) + "\n");
    m.write(a.out);
    return 0;
}

struct TrainArgs {
    std::string dataset, out, task = "auto", activation = "relu", regression_mode = "linear";
    TrainConfig train;
    std::vector<std::size_t> gcn_dims{16, 16};
    std::size_t gru_hidden = 16, head_hidden = 64;
};

int cmd_train(const TrainArgs& a) {
    if (a.train.epochs < 1) throw UsageError("--epochs must be >= 1");
    if (!(a.train.learning_rate > 0.0)) throw UsageError("--lr must be > 0");
    prepare_out(a.out);
    const Dataset d = load_dataset(a.dataset, a.train.seed);
    if (a.task != "auto" && parse_head_kind(a.task) != d.task.kind) {
        throw ValidationError("--task " + a.task + " does not match the dataset task (" +
                              std::string(to_string(d.task.kind)) + ")");
    }
    ModelConfig mc;
    mc.gcn_dims = a.gcn_dims;
    mc.gru_hidden = a.gru_hidden;
    mc.head_hidden = a.head_hidden;
    mc.gcn_activation = parse_activation(a.activation);
    mc.regression_mode = parse_regression_mode(a.regression_mode);
    const TrainResult r = train(d.graph, d.task, mc, a.train);

    Manifest m("train");
    m.input(a.dataset);
    m.config = {{"task", to_string(d.task.kind)},
                {"optimizer", "adam"},
                {"lr", a.train.learning_rate},
                {"epochs", a.train.epochs},
                {"beta1", a.train.beta1},
                {"beta2", a.train.beta2},
                {"adam_epsilon", a.train.adam_epsilon},
                {"batch", "full"},
                {"gcn_dims", a.gcn_dims},
                {"gcn_activation", a.activation},
                {"gru_hidden", a.gru_hidden},
                {"head_hidden", a.head_hidden},
                {"regression_mode", a.regression_mode},
                {"final_loss", r.loss_history.back()}};
    m.seeds = {{"seed", a.train.seed}};
    m.output(a.out, "weights.bin", encode_params(r.params));
    std::string csv = "epoch,loss\n";
    for (std::size_t e = 0; e < r.loss_history.size(); ++e) {
        csv += std::to_string(e + 1) + "," + format_double(r.loss_history[e]) + "\n";
    }
    m.output(a.out, "loss.csv", csv);
    m.write(a.out);
    return 0;
}

struct ExplainArgs {
    std::string dataset, weights, out, node, link, stabilizer = "sign_aware";
    std::vector<std::string> methods{"dgx"};
    double epsilon = 1e-4;
    std::uint64_t seed = 0;
};

int cmd_explain(const ExplainArgs& a) {
    for (const std::string& method : a.methods) {
        if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end()) {
            throw UsageError("unknown method '" + method + "' (valid: dgx, sa, gradinput)");
        }
    }
    ExplainerConfig ec{a.epsilon, parse_stabilizer_mode(a.stabilizer)};
    validate_config(ec);
    prepare_out(a.out);
    const Dataset d = load_dataset(a.dataset, a.seed);
    const ModelParams params = load_params(a.weights);

    Query q;
    if (!a.node.empty() || !a.link.empty()) {
        q = parse_query(a.node, a.link);
    } else if (const auto truth = find_truth(a.dataset)) {
        q = Query::node(truth->query_node);
    } else {
        q = d.task.queries().front();
    }

    Manifest m("explain");
    m.input(a.dataset);
    m.input(a.weights);
    m.config = {{"methods", a.methods},
                {"epsilon", a.epsilon},
                {"stabilizer", a.stabilizer},
                {"query", query_to_json(q)}};
    m.seeds = {{"seed", a.seed}};
    for (const std::string& method : a.methods) {
        const RelevanceMap map = make_explainer(method, ec)(d.graph, params, q);
        m.output(a.out, "relevance_" + method + ".json", relevance_to_json(map).dump(2) + "\n");
        m.output(a.out, "relevance_" + method + ".csv", relevance_to_csv(map));
    }
    m.write(a.out);
    return 0;
}

struct EvaluateArgs {
    std::string dataset, weights, out, occlusion = "features", distance = "l1";
    std::vector<std::string> relevance;
    SweepConfig sweep;
    bool all_queries = false;
};

int cmd_evaluate(EvaluateArgs a) {
    if (a.relevance.empty()) throw UsageError("--relevance needs at least one file");
    for (const std::string& path : a.relevance) {
        if (!fs::exists(path)) throw FormatError("missing relevance file: " + path);
    }
    a.sweep.occlusion = parse_occlusion_mode(a.occlusion);
    a.sweep.distance = parse_stability_distance(a.distance);
    a.sweep.threads = thread_cap();
    validate_sweep_config(a.sweep);
    prepare_out(a.out);
    const Dataset d = load_dataset(a.dataset, a.sweep.seed);
    const ModelParams params = load_params(a.weights);

    Manifest m("evaluate");
    m.input(a.dataset);
    m.input(a.weights);
    std::set<std::string> seen;
    std::vector<EvalReport> reports;
    for (const std::string& path : a.relevance) {
        m.input(path);
        const RelevanceMap stored = relevance_from_json(read_json_file(path));
        if (!seen.insert(stored.method).second) {
            throw UsageError("two relevance files for method '" + stored.method + "'");
        }
        const Explainer ex = make_explainer(stored.method, stored.config);
        // The stored map must be what this dataset and model produce.
        const RelevanceMap again = ex(d.graph, params, stored.query);
        for (std::size_t t = 0; t < again.per_node.size(); ++t) {
            if (stored.per_node.size() != again.per_node.size() || stored.per_node[t] != again.per_node[t]) {
                throw ValidationError(path + ": relevance does not match the given dataset and weights");
            }
        }
        QuerySet qs;
        if (a.all_queries) {
            qs.queries = d.task.queries();
        } else {
            qs.queries = {stored.query};
        }
        for (const Query& q : qs.queries) qs.targets.push_back(target_for(d.task, q));
        reports.push_back(sweep({{stored.method, ex}}, d.graph, params, qs, a.sweep, &d.task).front());
    }

    m.config = {{"keep_fractions", a.sweep.keep_fractions},
                {"threshold_grid", a.sweep.threshold_grid},
                {"perturb_seeds", a.sweep.perturb_seeds},
                {"perturb_fraction", a.sweep.perturb_fraction},
                {"random_baseline_samples", a.sweep.random_baseline_samples},
                {"occlusion", a.occlusion},
                {"distance", a.distance},
                {"all_queries", a.all_queries}};
    m.seeds = {{"seed", a.sweep.seed}};
    for (const EvalReport& r : reports) {
        m.output(a.out, "eval_" + r.method + ".json", report_to_json(r).dump(2) + "\n");
        m.output(a.out, "eval_" + r.method + ".csv", report_to_csv(r));
    }
    m.write(a.out);
    return 0;
}

struct ReportArgs {
    std::vector<std::string> reports;
    std::string out;
};

double curve_mean(const std::vector<CurvePoint>& c) {
    double s = 0.0;
    for (const CurvePoint& p : c) s += p.y;
    return c.empty() ? 0.0 : s / static_cast<double>(c.size());
}

int cmd_report(const ReportArgs& a) {
    if (a.reports.empty()) throw UsageError("report needs at least one eval report");
    std::vector<EvalReport> rows;
    Manifest m("report");
    for (const std::string& path : a.reports) {
        if (!fs::exists(path)) throw FormatError("missing eval report: " + path);
        m.input(path);
        rows.push_back(report_from_json(read_json_file(path)));
    }
    const std::vector<double>& keeps = rows.front().config.keep_fractions;
    for (const EvalReport& r : rows) {
        if (r.config.keep_fractions != keeps) {
            throw ValidationError("eval reports use different keep fractions");
        }
    }
    prepare_out(a.out);

    std::vector<std::string> header{"method"};
    for (double k : keeps) header.push_back("fidelity@" + format_double(k));
    for (const char* h : {"fidelity_auc", "random_fidelity_auc", "sparsity_mean", "stability", "task_metric", "task_value"}) {
        header.emplace_back(h);
    }
    std::vector<std::vector<std::string>> table;
    for (const EvalReport& r : rows) {
        std::vector<std::string> row{r.method};
        for (const CurvePoint& p : r.fidelity_curve) row.push_back(format_double(p.y));
        EvalReport random = r;
        random.fidelity_curve = r.random_fidelity_curve;
        row.push_back(format_double(r.fidelity_auc()));
        row.push_back(format_double(random.fidelity_auc()));
        row.push_back(format_double(curve_mean(r.sparsity_curve)));
        row.push_back(format_double(r.stability));
        row.push_back(r.task ? r.task->name : "");
        row.push_back(r.task ? format_double(r.task->value) : "");
        table.push_back(std::move(row));
    }

    std::string csv;
    std::string md;
    auto join = [](const std::vector<std::string>& cells, const std::string& sep) {
        std::string s;
        for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? sep : "") + cells[i];
        return s;
    };
    csv += join(header, ",") + "\n";
    md += "| " + join(header, " | ") + " |\n|" ;
    for (std::size_t i = 0; i < header.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& row : table) {
        csv += join(row, ",") + "\n";
        md += "| " + join(row, " | ") + " |\n";
    }
    m.output(a.out, "table.csv", csv);
    m.output(a.out, "table.md", md);
    m.write(a.out);
    return 0;
}

void emit_error(const std::string& kind, const std::string& message) {
    std::string flat = message;
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    std::cerr << json{{"error", kind}, {"message", flat}}.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Relevance explanations for GCN-GRU models on dynamic graphs", "dgx"};
    app.require_subcommand(1);
    app.set_version_flag("--version", DGX_VERSION);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a planted-cause benchmark");
    s->add_option("--nodes", synth.spec.nodes, "Number of nodes")->capture_default_str();
    s->add_option("--features", synth.spec.features, "Feature dimension")->capture_default_str();
    s->add_option("--steps", synth.spec.steps, "Number of snapshots")->capture_default_str();
    s->add_option("--planted", synth.spec.planted, "Planted node ids")->delimiter(',')->capture_default_str();
    s->add_option("--noise", synth.spec.noise, "Label noise amplitude")->capture_default_str();
    s->add_option("--causal-step", synth.spec.causal_step, "1-based causal step (0 = last)")->capture_default_str();
    s->add_option("--edge-probability", synth.spec.edge_probability, "Random edge probability")->capture_default_str();
    s->add_option("--seed", synth.spec.seed, "Generator seed")->capture_default_str();
    s->add_option("--out", synth.out, "Output directory")->required();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train a GCN-GRU model");
    t->add_option("--dataset", tr.dataset, "Dataset directory or edge list")->required();
    t->add_option("--task", tr.task, "auto, link or regression")->capture_default_str();
    t->add_option("--epochs", tr.train.epochs, "Training epochs")->capture_default_str();
    t->add_option("--lr", tr.train.learning_rate, "Adam learning rate")->capture_default_str();
    t->add_option("--seed", tr.train.seed, "Initialization seed")->capture_default_str();
    t->add_option("--gcn-dims", tr.gcn_dims, "GCN layer widths")->delimiter(',')->capture_default_str();
    t->add_option("--gru-hidden", tr.gru_hidden, "GRU hidden size")->capture_default_str();
    t->add_option("--head-hidden", tr.head_hidden, "MLP hidden size")->capture_default_str();
    t->add_option("--activation", tr.activation, "GCN activation: relu, tanh, identity")->capture_default_str();
    t->add_option("--regression-mode", tr.regression_mode, "linear or softmax")->capture_default_str();
    t->add_option("--out", tr.out, "Output directory")->required();

    ExplainArgs ex;
    auto* e = app.add_subcommand("explain", "Compute relevance maps");
    e->add_option("--dataset", ex.dataset, "Dataset directory or edge list")->required();
    e->add_option("--weights", ex.weights, "Weights file")->required();
    e->add_option("--method", ex.methods, "dgx, sa, gradinput (comma list)")->delimiter(',')->capture_default_str();
    e->add_option("--epsilon", ex.epsilon, "LRP stabilizer")->capture_default_str();
    e->add_option("--stabilizer", ex.stabilizer, "sign_aware or literal")->capture_default_str();
    e->add_option("--node", ex.node, "Explain the prediction for this node");
    e->add_option("--link", ex.link, "Explain the link u,v");
    e->add_option("--seed", ex.seed, "Seed for edge-list task sampling")->capture_default_str();
    e->add_option("--out", ex.out, "Output directory")->required();

    EvaluateArgs ev;
    auto* v = app.add_subcommand("evaluate", "Score relevance maps");
    v->add_option("--dataset", ev.dataset, "Dataset directory or edge list")->required();
    v->add_option("--weights", ev.weights, "Weights file")->required();
    v->add_option("--relevance", ev.relevance, "Relevance JSON files")->required();
    v->add_option("--keep-fractions", ev.sweep.keep_fractions, "Fidelity keep fractions")->delimiter(',')->capture_default_str();
    v->add_option("--threshold-grid", ev.sweep.threshold_grid, "Sparsity thresholds")->delimiter(',');
    v->add_option("--perturb-seeds", ev.sweep.perturb_seeds, "Stability perturbations")->capture_default_str();
    v->add_option("--perturb-fraction", ev.sweep.perturb_fraction, "Added-edge fraction")->capture_default_str();
    v->add_option("--random-samples", ev.sweep.random_baseline_samples, "Random-ranking samples")->capture_default_str();
    v->add_option("--occlusion", ev.occlusion, "features or edges")->capture_default_str();
    v->add_option("--distance", ev.distance, "l1 or cosine")->capture_default_str();
    v->add_option("--seed", ev.sweep.seed, "Perturbation seed")->capture_default_str();
    v->add_flag("--all-queries", ev.all_queries, "Average over every task query");
    v->add_option("--out", ev.out, "Output directory")->required();

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "Tabulate eval reports");
    r->add_option("--reports", rep.reports, "Eval report JSON files");
    r->add_option("--out", rep.out, "Output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& err) {
        return app.exit(err);
    } catch (const CLI::ParseError& err) {
        emit_error("usage", err.what());
        return kUsageExit;
    }

    try {
        if (*s) return cmd_synth(synth);
        if (*t) return cmd_train(tr);
        if (*e) return cmd_explain(ex);
        if (*v) return cmd_evaluate(ev);
        if (*r) return cmd_report(rep);
        return kUsageExit;
    } catch (const UsageError& err) {
        emit_error("usage", err.what());
        return kUsageExit;
    } catch (const ValidationError& err) {
        emit_error("validation", err.what());
    } catch (const FormatError& err) {
        emit_error("format", err.what());
    } catch (const NumericError& err) {
        emit_error("numeric", err.what());
    } catch (const std::exception& err) {
        emit_error("runtime", err.what());
    }
    return kRuntimeExit;
}

}  // namespace dgx
