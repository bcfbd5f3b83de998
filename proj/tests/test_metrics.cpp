#include "dgx/baselines.hpp"
#include "dgx/io.hpp"
#include "dgx/metrics.hpp"
#include "support/instances.hpp"

#include <doctest.h>

using namespace dgx;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (double x : xs) v(k++) = x;
    return v;
}

// Loop version: share of nodes whose min-max scaled score is below the threshold.
double sparsity_loop(const Vector& s, double th) {
    double lo = s(0), hi = s(0);
    for (Eigen::Index i = 0; i < s.size(); ++i) lo = std::min(lo, s(i)), hi = std::max(hi, s(i));
    int below = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double x = hi > lo ? (s(i) - lo) / (hi - lo) : 0.0;
        below += x < th;
    }
    return static_cast<double>(below) / static_cast<double>(s.size());
}

RelevanceMap constant_map(const DynamicGraph& g, const ModelParams&, const Query& q) {
    RelevanceMap m;
    m.method = "const";
    m.query = q;
    for (std::size_t t = 0; t < g.num_steps(); ++t) {
        m.per_feature.push_back(Matrix::Ones(static_cast<Eigen::Index>(g.num_nodes()), 1));
        m.per_node.push_back(Vector::Ones(static_cast<Eigen::Index>(g.num_nodes())));
    }
    return m;
}

/// Trains once on the bundled planted dataset.
struct Planted {
    Dataset data;
    GroundTruth truth;
    ModelParams params;
    Planted() {
        data = load_dataset(std::string(DGX_DATA_DIR) + "/planted");
        truth = truth_from_json(read_json_file(std::string(DGX_DATA_DIR) + "/planted/truth.json"));
        params = train(data.graph, data.task, ModelConfig{}, TrainConfig{}).params;
    }
};

const Planted& planted() {
    static const Planted p;
    return p;
}

}  // namespace

TEST_CASE("sparsity") {
    CHECK(sparsity(vec({0.9, 0.1, 0.05, 0.0}), 0.5) == 0.75);
    CHECK(sparsity(vec({0.9, 0.1, 0.05, 0.0}), 0.0) == 0.0);
    CHECK(sparsity(vec({0.9, 0.1, 0.05, 0.0}), 1.0) == 0.75);  // the maximum never counts
    CHECK(sparsity(vec({2.0, 2.0, 2.0}), 0.5) == 1.0);
    CHECK(min_max_normalize(vec({3, 3})).isZero(0.0));
    CHECK_THROWS_AS(sparsity(vec({1, 2}), 1.5), ValidationError);
    CHECK_THROWS_AS(sparsity(vec({1, 2}), -0.1), ValidationError);
    CHECK_THROWS_AS(sparsity(Vector(), 0.5), ValidationError);
    CHECK_THROWS_AS(sparsity(vec({1, std::nan("")}), 0.5), ValidationError);

    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        Vector s(static_cast<Eigen::Index>(1 + rng.below(30)));
        for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = rng.uniform(-3, 3);
        double prev = 0.0;
        for (int k = 0; k <= 20; ++k) {
            const double v = sparsity(s, k / 20.0);
            CHECK(v == sparsity_loop(s, k / 20.0));
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("occlusion helpers") {
    CHECK(occlusion_count(10, 1.0) == 0);
    CHECK(occlusion_count(10, 0.9) == 1);
    CHECK(occlusion_count(10, 0.5) == 5);
    CHECK(occlusion_count(7, 0.5) == 3);
    CHECK_THROWS_AS(occlusion_count(10, 0.0), ValidationError);
    CHECK_THROWS_AS(occlusion_count(10, 1.1), ValidationError);

    CHECK(top_nodes(vec({0.2, 0.9, 0.9, 0.1}), 2) == std::vector<std::size_t>{1, 2});
    CHECK(top_nodes(vec({0.5, 0.5, 0.5}), 1) == std::vector<std::size_t>{0});

    Rng rng(1);
    const auto g = fixture::random_graph(rng, 4, 2, 2, 1.0);
    const auto f = occlude_nodes(g, {2}, OcclusionMode::features);
    const auto e = occlude_nodes(g, {2}, OcclusionMode::edges);
    for (std::size_t t = 0; t < 2; ++t) {
        CHECK(f.snapshots[t].features.row(2).isZero(0.0));
        CHECK(f.snapshots[t].adjacency == g.snapshots[t].adjacency);
        CHECK(e.snapshots[t].adjacency.row(2).isZero(0.0));
        CHECK(e.snapshots[t].adjacency.col(2).isZero(0.0));
        CHECK(e.snapshots[t].features == g.snapshots[t].features);
    }
    CHECK(parse_occlusion_mode("edges") == OcclusionMode::edges);
    CHECK_THROWS_AS(parse_occlusion_mode("nodes"), ValidationError);
}

TEST_CASE("fidelity") {
    Rng rng(6);
    auto g = fixture::random_graph(rng, 5, 2, 3, 0.0);  // no edges: nodes only see themselves
    ModelConfig mc;
    mc.head_kind = HeadKind::node_regression;
    const ModelParams p = init_params(mc, 3);
    const Query q = Query::node(1);

    SUBCASE("keeping everything changes nothing") {
        CHECK(fidelity(g, p, q, std::nullopt, vec({1, 2, 3, 4, 5}), 1.0) == 0.0);
        CHECK(fidelity(g, p, q, 0.3, vec({1, 2, 3, 4, 5}), 1.0) == 0.0);
    }
    SUBCASE("occluding the causal node moves the output, an unconnected one does not") {
        CHECK(fidelity(g, p, q, std::nullopt, vec({0, 1, 0, 0, 0}), 0.8) > 0.0);
        CHECK(fidelity(g, p, q, std::nullopt, vec({0, 0, 0, 1, 0}), 0.8) == 0.0);
        CHECK(fidelity(g, p, q, std::nullopt, vec({0, 0, 0, 1, 0}), 0.8, OcclusionMode::edges) == 0.0);
    }
    SUBCASE("mode names") {
        CHECK(fidelity_mode(Query::node(0), 1.0) != fidelity_mode(Query::node(0), std::nullopt));
        CHECK(fidelity_mode(Query::link(0, 1), std::nullopt) != fidelity_mode(Query::node(0), std::nullopt));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(fidelity(g, p, q, std::nullopt, vec({1, 2}), 0.5), ValidationError);
        CHECK_THROWS_AS(fidelity(g, p, q, std::nullopt, vec({1, 2, 3, 4, 5}), 0.0), ValidationError);
        CHECK_THROWS_AS(random_fidelity_baseline(g, p, q, std::nullopt, 0.5, 0, 1), ValidationError);
    }
    SUBCASE("random baseline is reproducible per seed") {
        const double a = random_fidelity_baseline(g, p, q, std::nullopt, 0.6, 20, 9);
        CHECK(a == random_fidelity_baseline(g, p, q, std::nullopt, 0.6, 20, 9));
        CHECK(a > 0.0);
    }
}

TEST_CASE("add_random_edges") {
    Rng rng(2);
    const auto g = fixture::random_graph(rng, 8, 1, 3, 0.3);
    const auto h = add_random_edges(g, 0.2, 5);
    for (std::size_t t = 0; t < 3; ++t) {
        const std::size_t before = count_undirected_edges(g.snapshots[t].adjacency);
        const auto want = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(before)));
        CHECK(count_undirected_edges(h.snapshots[t].adjacency) == before + want);
        const Matrix& a = h.snapshots[t].adjacency;
        CHECK(a == a.transpose());
        CHECK((a.array() >= g.snapshots[t].adjacency.array()).all());
    }
    CHECK(add_random_edges(g, 0.0, 5).snapshots[0].adjacency == g.snapshots[0].adjacency);
    CHECK(add_random_edges(g, 0.2, 5).snapshots[1].adjacency == h.snapshots[1].adjacency);

    const auto full = fixture::random_graph(rng, 4, 1, 1, 1.0);
    CHECK_THROWS_WITH_AS(add_random_edges(full, 0.2, 0), doctest::Contains("already complete"), ValidationError);
    CHECK_THROWS_AS(add_random_edges(g, -0.1, 0), ValidationError);
}

TEST_CASE("stability") {
    const fixture::Instance in = fixture::small_instance(3);
    const Explainer dgx = [](const DynamicGraph& g, const ModelParams& p, const Query& q) { return explain(g, p, q); };
    SUBCASE("no perturbation gives zero") {
        CHECK(stability(dgx, in.graph, in.params, in.query, 1, 0.0) == 0.0);
    }
    SUBCASE("a constant explainer is perfectly stable") {
        Rng rng(9);
        const auto g = fixture::random_graph(rng, 6, 1, 2, 0.3);
        CHECK(stability(constant_map, g, in.params, Query::node(0), 4) == 0.0);
        CHECK(stability(constant_map, g, in.params, Query::node(0), 4, 0.2, StabilityDistance::cosine) ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("pinned value for one instance") {
        Rng rng(21);
        const auto g = fixture::random_graph(rng, 6, 2, 3, 0.4);
        ModelConfig mc;
        mc.gcn_dims = {4, 4};
        mc.gru_hidden = 4;
        mc.head_hidden = 8;
        const ModelParams p = init_params(mc, 21);
        const double s = stability(dgx, g, p, Query::link(0, 5), 7);
        CHECK(s > 0.0);
        CHECK(s == doctest::Approx(0.34513796763240023).epsilon(1e-9));  // self-pinned reference run
    }
    SUBCASE("score_distance") {
        const std::vector<Vector> a{vec({1, 1}), vec({2, 0})};
        const std::vector<Vector> b{vec({1, 1}), vec({0, 2})};
        CHECK(score_distance(a, b, StabilityDistance::l1) == doctest::Approx(1.0));
        CHECK(score_distance(a, b, StabilityDistance::cosine) == doctest::Approx(0.5));
        CHECK(score_distance(a, a, StabilityDistance::l1) == 0.0);
        CHECK_THROWS_AS(score_distance(a, {vec({1, 1})}, StabilityDistance::l1), ValidationError);
        CHECK(parse_stability_distance("cosine") == StabilityDistance::cosine);
        CHECK_THROWS_AS(parse_stability_distance("l2"), ValidationError);
    }
}

TEST_CASE("task metrics") {
    CHECK(auc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == 1.0);
    CHECK(auc({0.1, 0.2, 0.9, 0.8}, {1, 1, 0, 0}) == 0.0);
    CHECK(auc({0.5, 0.5}, {1, 0}) == 0.5);
    CHECK_THROWS_AS(auc({0.5, 0.5}, {1, 1}), ValidationError);
    CHECK_THROWS_AS(auc({0.5}, {1, 0}), ValidationError);
    CHECK(mae({1, 2, 3}, {1, 0, 4}) == 1.0);
    CHECK_THROWS_AS(mae({}, {}), ValidationError);

    const Planted& pl = planted();
    const TaskMetric m = task_metric(pl.data.graph, pl.params, pl.data.task);
    CHECK(m.name == "mae");
    CHECK(m.value < 0.5);
}

TEST_CASE("sweep") {
    const Planted& pl = planted();
    const Explainer dgx = [](const DynamicGraph& g, const ModelParams& p, const Query& q) { return explain(g, p, q); };
    QuerySet qs;
    qs.queries = {Query::node(pl.truth.query_node)};
    qs.targets = {std::nullopt};
    SweepConfig cfg;
    cfg.perturb_seeds = 3;
    cfg.random_baseline_samples = 20;

    const auto reports = sweep({{"a", dgx}, {"b", dgx}}, pl.data.graph, pl.params, qs, cfg, &pl.data.task);
    REQUIRE(reports.size() == 2);
    const EvalReport& r = reports[0];
    CHECK(r.method == "a");
    CHECK(r.fidelity_curve.size() == 5);
    CHECK(r.random_fidelity_curve.size() == 5);
    CHECK(r.sparsity_curve.size() == 21);
    CHECK(r.num_queries == 1);
    CHECK(r.task.has_value());
    CHECK(r.fidelity_curve == reports[1].fidelity_curve);
    CHECK(r.sparsity_curve == reports[1].sparsity_curve);
    CHECK(r.stability == reports[1].stability);

    EvalReport rand = r;
    rand.fidelity_curve = r.random_fidelity_curve;
    CHECK(r.fidelity_auc() > rand.fidelity_auc());

    SUBCASE("threads do not change the numbers") {
        SweepConfig par = cfg;
        par.threads = 4;
        QuerySet many = qs;
        for (std::size_t u = 0; u < 4; ++u) {
            many.queries.push_back(Query::node(u));
            many.targets.push_back(std::nullopt);
        }
        cfg.threads = 1;
        const auto one = sweep({{"a", dgx}}, pl.data.graph, pl.params, many, cfg);
        const auto four = sweep({{"a", dgx}}, pl.data.graph, pl.params, many, par);
        CHECK(one[0].fidelity_curve == four[0].fidelity_curve);
        CHECK(one[0].random_fidelity_curve == four[0].random_fidelity_curve);
        CHECK(one[0].stability == four[0].stability);
    }
    SUBCASE("config errors") {
        SweepConfig bad = cfg;
        bad.keep_fractions = {0.0};
        CHECK_THROWS_AS(sweep({{"a", dgx}}, pl.data.graph, pl.params, qs, bad), ValidationError);
        bad = cfg;
        bad.threshold_grid = {1.5};
        CHECK_THROWS_AS(sweep({{"a", dgx}}, pl.data.graph, pl.params, qs, bad), ValidationError);
        bad = cfg;
        bad.perturb_seeds = 0;
        CHECK_THROWS_AS(sweep({{"a", dgx}}, pl.data.graph, pl.params, qs, bad), ValidationError);
        CHECK_THROWS_AS(sweep({{"a", dgx}}, pl.data.graph, pl.params, QuerySet{}, cfg), ValidationError);
    }
}

TEST_CASE("parallel_for covers every index once and forwards exceptions") {
    std::vector<int> hits(37, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw NumericError("x"); }), NumericError);
}
