#include "dgx/metrics.hpp"

#include "dgx/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace dgx {

Vector min_max_normalize(const Vector& scores) {
    if (scores.size() == 0) {
        return scores;
    }
    if (!scores.allFinite()) {
        throw ValidationError("scores must be finite");
    }
    const double lo = scores.minCoeff();
    const double hi = scores.maxCoeff();
    if (!(hi > lo)) {
        return Vector::Zero(scores.size());
    }
    return ((scores.array() - lo) / (hi - lo)).matrix();
}

double sparsity(const Vector& scores, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ValidationError("sparsity threshold must lie in [0, 1]");
    }
    if (scores.size() == 0) {
        throw ValidationError("sparsity of an empty score vector");
    }
    const Vector norm = min_max_normalize(scores);
    const auto below = (norm.array() < threshold).count();
    return static_cast<double>(below) / static_cast<double>(scores.size());
}

std::string_view to_string(OcclusionMode m) { return m == OcclusionMode::features ? "features" : "edges"; }

OcclusionMode parse_occlusion_mode(std::string_view s) {
    if (s == "features") return OcclusionMode::features;
    if (s == "edges") return OcclusionMode::edges;
    throw ValidationError("unknown occlusion mode '" + std::string(s) + "' (expected features, edges)");
}

std::size_t occlusion_count(std::size_t num_nodes, double keep_fraction) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
        throw ValidationError("keep fraction must lie in (0, 1]");
    }
    const double raw = (1.0 - keep_fraction) * static_cast<double>(num_nodes);
    return std::min(num_nodes, static_cast<std::size_t>(std::floor(raw + 1e-9)));
}

std::vector<std::size_t> top_nodes(const Vector& scores, std::size_t count) {
    std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
    });
    order.resize(std::min(count, order.size()));
    return order;
}

DynamicGraph occlude_nodes(const DynamicGraph& graph, const std::vector<std::size_t>& nodes, OcclusionMode mode) {
    DynamicGraph out = graph;
    for (Snapshot& s : out.snapshots) {
        for (std::size_t u : nodes) {
            const auto i = static_cast<Eigen::Index>(u);
            if (mode == OcclusionMode::features) {
                s.features.row(i).setZero();
            } else {
                s.adjacency.row(i).setZero();
                s.adjacency.col(i).setZero();
            }
        }
    }
    return out;
}

std::string fidelity_mode(const Query& query, std::optional<double> target) {
    if (query.is_link) {
        return "probability_delta";
    }
    return target ? "abs_error_delta" : "prediction_delta";
}

namespace {

double fidelity_metric(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                       std::optional<double> target) {
    const ForwardTrace trace = model_forward(graph, params, query);
    if (query.is_link) {
        return trace.head.probability;
    }
    return target ? std::abs(trace.prediction() - *target) : trace.prediction();
}

double fidelity_for_nodes(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                          std::optional<double> target, const std::vector<std::size_t>& nodes, OcclusionMode mode,
                          double original) {
    if (nodes.empty()) {
        return 0.0;
    }
    const double occluded = fidelity_metric(occlude_nodes(graph, nodes, mode), params, query, target);
    return std::abs(original - occluded);
}

}  // namespace

double fidelity(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                std::optional<double> target, const Vector& node_scores, double keep_fraction, OcclusionMode mode) {
    const std::size_t n = graph.num_nodes();
    if (static_cast<std::size_t>(node_scores.size()) != n) {
        throw ValidationError("fidelity needs one score per node");
    }
    const std::size_t count = occlusion_count(n, keep_fraction);
    if (count == 0) {
        return 0.0;
    }
    const double original = fidelity_metric(graph, params, query, target);
    return fidelity_for_nodes(graph, params, query, target, top_nodes(node_scores, count), mode, original);
}

double random_fidelity_baseline(const DynamicGraph& graph, const ModelParams& params, const Query& query,
                                std::optional<double> target, double keep_fraction, int samples, std::uint64_t seed,
                                OcclusionMode mode) {
    if (samples < 1) {
        throw ValidationError("random baseline needs at least one sample");
    }
    const std::size_t n = graph.num_nodes();
    const std::size_t count = occlusion_count(n, keep_fraction);
    if (count == 0) {
        return 0.0;
    }
    const double original = fidelity_metric(graph, params, query, target);
    Rng rng(seed);
    double total = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vector scores(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < scores.size(); ++i) {
            scores(i) = rng.uniform();
        }
        total += fidelity_for_nodes(graph, params, query, target, top_nodes(scores, count), mode, original);
    }
    return total / samples;
}

DynamicGraph add_random_edges(const DynamicGraph& graph, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0)) {
        throw ValidationError("perturbation fraction must be >= 0");
    }
    DynamicGraph out = graph;
    Rng rng(seed);
    for (std::size_t t = 0; t < out.snapshots.size(); ++t) {
        Matrix& a = out.snapshots[t].adjacency;
        const std::size_t edges = count_undirected_edges(a);
        const auto wanted = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(edges) - 1e-9));
        if (wanted == 0) {
            continue;
        }
        std::vector<std::pair<Eigen::Index, Eigen::Index>> free_pairs;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
                if (a(i, j) == 0.0 && a(j, i) == 0.0) {
                    free_pairs.emplace_back(i, j);
                }
            }
        }
        if (free_pairs.size() < wanted) {
            throw ValidationError("t=" + std::to_string(t + 1) + ": graph has room for " +
                                  std::to_string(free_pairs.size()) + " new edges, " + std::to_string(wanted) +
                                  " requested (graph already complete)");
        }
        for (std::size_t k = 0; k < wanted; ++k) {
            const std::size_t pick = k + static_cast<std::size_t>(rng.below(free_pairs.size() - k));
            std::swap(free_pairs[k], free_pairs[pick]);
            const auto [i, j] = free_pairs[k];
            a(i, j) = 1.0;
            a(j, i) = 1.0;
        }
    }
    return out;
}

std::string_view to_string(StabilityDistance d) { return d == StabilityDistance::l1 ? "l1" : "cosine"; }

StabilityDistance parse_stability_distance(std::string_view s) {
    if (s == "l1") return StabilityDistance::l1;
    if (s == "cosine") return StabilityDistance::cosine;
    throw ValidationError("unknown stability distance '" + std::string(s) + "' (expected l1, cosine)");
}

double score_distance(const std::vector<Vector>& a, const std::vector<Vector>& b, StabilityDistance distance) {
    if (a.size() != b.size() || a.empty()) {
        throw ValidationError("score_distance: sequences differ in length or are empty");
    }
    double total = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (distance == StabilityDistance::l1) {
            total += (a[t] - b[t]).lpNorm<1>() / (a[t].lpNorm<1>() + 1e-12);
        } else {
            const double na = a[t].norm();
            const double nb = b[t].norm();
            if (na == 0.0 && nb == 0.0) {
                continue;
            }
            total += 1.0 - a[t].dot(b[t]) / (na * nb + 1e-12);
        }
    }
    return total / static_cast<double>(a.size());
}

double stability(const Explainer& explainer, const DynamicGraph& graph, const ModelParams& params, const Query& query,
                 std::uint64_t perturb_seed, double fraction, StabilityDistance distance) {
    const RelevanceMap base = explainer(graph, params, query);
    const RelevanceMap moved = explainer(add_random_edges(graph, fraction, perturb_seed), params, query);
    return score_distance(base.per_node, moved.per_node, distance);
}

double auc(const std::vector<double>& scores, const std::vector<double>& labels) {
    if (scores.size() != labels.size()) {
        throw ValidationError("auc: scores and labels differ in length");
    }
    double pairs = 0.0;
    double wins = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1.0) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0.0) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) {
                wins += 1.0;
            } else if (scores[i] == scores[j]) {
                wins += 0.5;
            }
        }
    }
    if (pairs == 0.0) {
        throw ValidationError("auc needs at least one positive and one negative label");
    }
    return wins / pairs;
}

double mae(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.size() != targets.size() || predictions.empty()) {
        throw ValidationError("mae: inputs differ in length or are empty");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        total += std::abs(predictions[i] - targets[i]);
    }
    return total / static_cast<double>(predictions.size());
}

TaskMetric task_metric(const DynamicGraph& graph, const ModelParams& params, const Task& task) {
    validate_task(task, graph.num_nodes());
    const EncoderTrace enc = encode(graph, params);
    std::vector<double> predictions;
    for (const Query& q : task.queries()) {
        predictions.push_back(head_forward(params.head, head_input(enc, q)).output);
    }
    if (task.kind == HeadKind::link_prediction) {
        return {"auc", auc(predictions, task.labels())};
    }
    return {"mae", mae(predictions, task.targets)};
}

std::vector<double> SweepConfig::default_threshold_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) {
        grid.push_back(k / 20.0);
    }
    return grid;
}

void validate_sweep_config(const SweepConfig& config) {
    if (config.keep_fractions.empty() || config.threshold_grid.empty()) {
        throw ValidationError("sweep needs keep fractions and a threshold grid");
    }
    for (double k : config.keep_fractions) {
        if (!(k > 0.0 && k <= 1.0)) {
            throw ValidationError("keep fraction must lie in (0, 1]");
        }
    }
    for (double th : config.threshold_grid) {
        if (!(th >= 0.0 && th <= 1.0)) {
            throw ValidationError("threshold must lie in [0, 1]");
        }
    }
    if (config.perturb_seeds < 1 || config.random_baseline_samples < 1) {
        throw ValidationError("perturb seeds and random baseline samples must be >= 1");
    }
}

double EvalReport::fidelity_auc() const {
    std::vector<CurvePoint> pts = fidelity_curve;
    std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.x < b.x; });
    double area = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        area += 0.5 * (pts[k].y + pts[k - 1].y) * (pts[k].x - pts[k - 1].x);
    }
    return area;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < count; i += workers) {
                        fn(i);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::vector<EvalReport> sweep(const std::vector<NamedExplainer>& explainers, const DynamicGraph& graph,
                              const ModelParams& params, const QuerySet& queries, const SweepConfig& config,
                              const Task* task) {
    validate_sweep_config(config);
    validate_dynamic_graph(graph);
    if (queries.queries.empty() || queries.queries.size() != queries.targets.size()) {
        throw ValidationError("sweep needs at least one query and one (optional) target per query");
    }
    const std::size_t nq = queries.queries.size();
    const std::size_t nk = config.keep_fractions.size();
    const std::size_t nt = config.threshold_grid.size();
    std::optional<TaskMetric> metric;
    if (task != nullptr) {
        metric = task_metric(graph, params, *task);
    }

    // The random baseline does not depend on the explainer.
    std::vector<std::vector<double>> random_fid(nq, std::vector<double>(nk, 0.0));
    parallel_for(nq, config.threads, [&](std::size_t q) {
        for (std::size_t k = 0; k < nk; ++k) {
            random_fid[q][k] = random_fidelity_baseline(graph, params, queries.queries[q], queries.targets[q],
                                                        config.keep_fractions[k], config.random_baseline_samples,
                                                        config.seed + 1000003ULL * q + k, config.occlusion);
        }
    });

    std::vector<EvalReport> reports;
    for (const NamedExplainer& ex : explainers) {
        std::vector<std::vector<double>> fid(nq, std::vector<double>(nk, 0.0));
        std::vector<std::vector<double>> spars(nq, std::vector<double>(nt, 0.0));
        std::vector<double> stab(nq, 0.0);
        parallel_for(nq, config.threads, [&](std::size_t q) {
            const Query& query = queries.queries[q];
            const RelevanceMap map = ex.explain(graph, params, query);
            const Vector totals = map.node_totals();
            for (std::size_t k = 0; k < nk; ++k) {
                fid[q][k] = fidelity(graph, params, query, queries.targets[q], totals, config.keep_fractions[k],
                                     config.occlusion);
            }
            for (std::size_t k = 0; k < nt; ++k) {
                spars[q][k] = sparsity(totals, config.threshold_grid[k]);
            }
            double s = 0.0;
            for (int seed = 0; seed < config.perturb_seeds; ++seed) {
                const RelevanceMap moved = ex.explain(
                    add_random_edges(graph, config.perturb_fraction, config.seed + static_cast<std::uint64_t>(seed)),
                    params, query);
                s += score_distance(map.per_node, moved.per_node, config.distance);
            }
            stab[q] = s / config.perturb_seeds;
        });

        EvalReport r;
        r.method = ex.name;
        r.config = config;
        r.task = metric;
        r.num_queries = nq;
        r.fidelity_mode = fidelity_mode(queries.queries.front(), queries.targets.front());
        for (std::size_t k = 0; k < nk; ++k) {
            double f = 0.0;
            double rf = 0.0;
            for (std::size_t q = 0; q < nq; ++q) {
                f += fid[q][k];
                rf += random_fid[q][k];
            }
            r.fidelity_curve.push_back({config.keep_fractions[k], f / static_cast<double>(nq)});
            r.random_fidelity_curve.push_back({config.keep_fractions[k], rf / static_cast<double>(nq)});
        }
        for (std::size_t k = 0; k < nt; ++k) {
            double s = 0.0;
            for (std::size_t q = 0; q < nq; ++q) {
                s += spars[q][k];
            }
            r.sparsity_curve.push_back({config.threshold_grid[k], s / static_cast<double>(nq)});
        }
        double s = 0.0;
        for (double v : stab) {
            s += v;
        }
        r.stability = s / static_cast<double>(nq);
        reports.push_back(std::move(r));
    }
    return reports;
}

}  // namespace dgx
