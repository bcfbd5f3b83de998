#include "dgx/lrp.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace dgx;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (double x : xs) v(k++) = x;
    return v;
}

ModelConfig small_config(HeadKind kind = HeadKind::node_regression) {
    ModelConfig mc;
    mc.input_dim = 2;
    mc.gcn_dims = {3, 3};
    mc.gru_hidden = 3;
    mc.head_hidden = 5;
    mc.head_kind = kind;
    return mc;
}

}  // namespace

TEST_CASE("stabilizer modes") {
    const ExplainerConfig sa{1e-4, StabilizerMode::sign_aware};
    const ExplainerConfig lit{1e-4, StabilizerMode::literal};
    CHECK(stabilize(0.0, sa) == 1e-4);
    CHECK(stabilize(0.0, lit) == 1e-4);
    CHECK(stabilize(-1e-5, lit) == doctest::Approx(9e-5));
    CHECK(stabilize(-1e-5, sa) == doctest::Approx(-1.1e-4));
    CHECK(stabilize(2.0, sa) == stabilize(2.0, lit));

    CHECK(parse_stabilizer_mode("literal") == StabilizerMode::literal);
    CHECK(parse_stabilizer_mode("sign_aware") == StabilizerMode::sign_aware);
    CHECK(to_string(StabilizerMode::literal) == "literal");
    CHECK_THROWS_WITH_AS(parse_stabilizer_mode("abs"), doctest::Contains("literal"), ValidationError);

    CHECK_THROWS_AS(validate_config({0.0}), ValidationError);
    CHECK_THROWS_AS(validate_config({-1e-3}), ValidationError);
    CHECK_THROWS_AS(validate_config({std::nan("")}), ValidationError);
    CHECK_NOTHROW(validate_config({}));
}

TEST_CASE("dense rule") {
    SUBCASE("identity weights pass relevance through") {
        const Vector r = lrp_dense_eps(vec({1, 2, 3}), Matrix::Identity(3, 3), vec({0.5, 1, 2}), 1e-4);
        CHECK((r - vec({0.5, 1, 2})).cwiseAbs().maxCoeff() < 1e-4);
        CHECK(std::abs(r.sum() - 3.5) < 1e-3);
    }
    SUBCASE("zero activation receives exactly zero") {
        Matrix w(3, 2);
        w << 1, -2, 0.5, 3, -1, 1;
        const Vector r = lrp_dense_eps(vec({0, 2, -1}), w, vec({1, -0.5}), 1e-4);
        CHECK(r(0) == 0.0);
    }
    SUBCASE("random 3x4 layer against the loop oracle") {
        Rng rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            Matrix w(3, 4);
            Vector a(3), r(4);
            for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-1, 1);
            for (Eigen::Index k = 0; k < 3; ++k) a(k) = rng.uniform(-1, 1);
            for (Eigen::Index k = 0; k < 4; ++k) r(k) = rng.uniform(-1, 1);
            for (bool sa : {true, false}) {
                const Vector got =
                    lrp_dense_eps(a, w, r, 1e-4, sa ? StabilizerMode::sign_aware : StabilizerMode::literal);
                CHECK((got - oracle::lrp(a, w, Vector(), r, 1e-4, sa)).cwiseAbs().maxCoeff() < 1e-12);
            }
        }
    }
    SUBCASE("affine rule accounts for every unit of relevance") {
        Matrix w(2, 2);
        w << 1, 2, -1, 0.5;
        const Vector a = vec({0.7, 0.2}), b = vec({0.3, -0.4}), r = vec({1.0, 2.0});
        const AffineRelevance out = lrp_affine_eps(a, w, b, r, {1e-12});
        CHECK(std::abs(out.relevance_in.sum() + out.absorbed - r.sum()) < 1e-9);
        CHECK((out.relevance_in - oracle::lrp(a, w, b, r, 1e-12, true)).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("shape errors") {
        CHECK_THROWS_WITH_AS(lrp_dense_eps(vec({1, 2}), Matrix::Identity(3, 3), vec({1, 1, 1}), 1e-4),
                             doctest::Contains("3x3"), ValidationError);
        CHECK_THROWS_AS(lrp_dense_eps(vec({1, 2}), Matrix::Identity(2, 2), vec({1, 1}), 0.0), ValidationError);
        CHECK_THROWS_AS(lrp_affine_eps(vec({1, 2}), Matrix::Identity(2, 2), vec({1}), vec({1, 1}), {}),
                        ValidationError);
    }
}

TEST_CASE("GRU step limits") {
    ModelConfig mc = small_config();
    ModelParams p = init_params(mc, 3);
    const Vector x = vec({0.4, -0.2, 0.9});
    const Vector hp = vec({0.5, -0.3, 0.8});
    const Vector r_h = vec({1.0, 0.5, -0.25});

    SUBCASE("z saturated at 0: everything goes to h_prev") {
        p.gru.b_iz.setConstant(-60.0);
        const GruRelevanceStep st = gru_relevance_step(gru_cell_forward(x, hp, p.gru).trace, p.gru, r_h, {});
        CHECK(st.r_n.cwiseAbs().maxCoeff() < 1e-12);
        CHECK((st.r_h_prev_from_h - r_h).cwiseAbs().maxCoeff() < 1e-3);
        CHECK(st.r_x_hat.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("z saturated at 1: everything goes through the candidate") {
        p.gru.b_iz.setConstant(60.0);
        const GruRelevanceStep st = gru_relevance_step(gru_cell_forward(x, hp, p.gru).trace, p.gru, r_h, {});
        CHECK(st.r_h_prev_from_h.cwiseAbs().maxCoeff() < 1e-12);
        CHECK((st.r_n - r_h).cwiseAbs().maxCoeff() < 1e-3);
        CHECK(((st.r_n1 + st.r_n2 + st.r_bn) - st.r_n).cwiseAbs().maxCoeff() < 1e-3);
    }
    SUBCASE("matches the loop oracle") {
        const GruRelevanceStep st = gru_relevance_step(gru_cell_forward(x, hp, p.gru).trace, p.gru, r_h, {});
        const oracle::GruRel o = oracle::gru_relevance(x, hp, p.gru, r_h, 1e-4, true);
        CHECK((st.r_x_hat - o.r_x).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((st.r_h_prev - o.r_hp).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((st.r_bn - o.r_bn).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((st.r_h_prev - st.r_h_prev_from_h - st.r_h_prev_from_n).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("bad sizes and non-finite relevance") {
        const GruStepTrace tr = gru_cell_forward(x, hp, p.gru).trace;
        CHECK_THROWS_AS(gru_relevance_step(tr, p.gru, vec({1, 2}), {}), ValidationError);
        CHECK_THROWS_AS(gru_relevance_step(tr, p.gru, vec({1, std::nan(""), 0}), {}), ValidationError);
    }
}

TEST_CASE("head relevance") {
    ModelConfig mc = small_config();
    mc.head_hidden = 3;
    ModelParams p = zero_params(mc);
    ForwardTrace tr;
    tr.query = Query::node(0);

    SUBCASE("identity hidden layer and summing output returns the inputs") {
        p.head.w1 = Matrix::Identity(3, 3);
        p.head.w2 = Matrix::Ones(1, 3);
        tr.head = head_forward(p.head, vec({0.2, 0.5, 1.3}));
        const HeadRelevance hr = head_relevance(tr, p.head, {1e-9});
        CHECK((hr.source - vec({0.2, 0.5, 1.3})).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(hr.seed_value == doctest::Approx(2.0));
        CHECK(hr.target.size() == 0);
    }
    SUBCASE("inactive hidden units carry nothing") {
        p.head.w1 = -Matrix::Identity(3, 3);
        p.head.w2 = Matrix::Ones(1, 3);
        tr.head = head_forward(p.head, vec({0.2, 0.5, 1.3}));
        const HeadRelevance hr = head_relevance(tr, p.head, {});
        CHECK(hr.seed_value == 0.0);
        CHECK(hr.source.isZero(0.0));
    }
    SUBCASE("conservation with biases counted as absorbed") {
        p = init_params(mc, 9);
        tr.head = head_forward(p.head, vec({0.7, -0.1, 0.4}));
        const HeadRelevance hr = head_relevance(tr, p.head, {1e-9});
        CHECK(std::abs(hr.total() + hr.absorbed - hr.seed_value) < 1e-6);
    }
    SUBCASE("trace without head activations") {
        CHECK_THROWS_AS(head_relevance(tr, p.head, {}), ValidationError);
    }
}

TEST_CASE("GCN relevance") {
    SUBCASE("no edges and identity weights return the incoming relevance") {
        GcnParams gp;
        gp.weights = {Matrix::Identity(2, 2)};
        gp.activation = Activation::identity;
        Matrix x(3, 2);
        x << 1, 2, -1, 0.5, 3, 1;
        const NormalizedAdjacency v = normalize_adjacency(Matrix::Zero(3, 3));
        const GcnTrace tr = gcn_forward(v, x, gp);
        Matrix r(3, 2);
        r << 0.1, 0.2, 0.3, -0.4, 0.5, 0.6;
        CHECK(oracle::max_abs_diff(gcn_relevance(tr, gp, v, r, {1e-12}), r) < 1e-10);
    }
    SUBCASE("random layers against the loop oracle") {
        Rng rng(12);
        for (int trial = 0; trial < 10; ++trial) {
            const auto g = fixture::random_graph(rng, 5, 3, 1);
            ModelConfig mc;
            mc.input_dim = 3;
            mc.gcn_dims = {4, 2};
            mc.gcn_activation = trial % 2 ? Activation::tanh : Activation::relu;
            const ModelParams p = init_params(mc, static_cast<std::uint64_t>(trial));
            const NormalizedAdjacency v = normalize_adjacency(g.snapshots[0].adjacency);
            const GcnTrace tr = gcn_forward(v, g.snapshots[0].features, p.gcn);
            const Matrix r = tr.features.back();  // activation-shaped seed
            const std::vector<Matrix> f = oracle::gcn(v.matrix, g.snapshots[0].features, p.gcn);
            CHECK(oracle::max_abs_diff(gcn_relevance(tr, p.gcn, v, r, {}),
                                       oracle::gcn_relevance(v.matrix, f, p.gcn, r, 1e-4, true)) < 1e-12);
        }
    }
    SUBCASE("shape errors") {
        GcnParams gp;
        gp.weights = {Matrix::Identity(2, 2)};
        const NormalizedAdjacency v = normalize_adjacency(Matrix::Zero(3, 3));
        const GcnTrace tr = gcn_forward(v, Matrix::Ones(3, 2), gp);
        CHECK_THROWS_AS(gcn_relevance(tr, gp, v, Matrix::Ones(3, 3), {}), ValidationError);
        GcnParams two = gp;
        two.weights.push_back(Matrix::Identity(2, 2));
        CHECK_THROWS_AS(gcn_relevance(tr, two, v, Matrix::Ones(3, 2), {}), ValidationError);
    }
}

TEST_CASE("aggregate_node_relevance is the row L1") {
    Matrix m(2, 3);
    m << 1, -2, 0.5, 0, 0, -3;
    const Vector r = aggregate_node_relevance(m);
    CHECK(r(0) == 3.5);
    CHECK(r(1) == 3.0);
    m(1, 1) = std::nan("");
    CHECK_THROWS_AS(aggregate_node_relevance(m), ValidationError);
}

TEST_CASE("full explanation") {
    SUBCASE("matches the oracle pass") {
        for (std::uint64_t s = 0; s < 16; ++s) {
            const fixture::Instance in = fixture::small_instance(s, s % 3 ? Activation::relu : Activation::tanh);
            const RelevanceMap m = explain(in.graph, in.params, in.query);
            const oracle::Explanation o = oracle::explain(in.graph, in.params, in.query, 1e-4, true);
            CAPTURE(s);
            for (std::size_t t = 0; t < m.per_feature.size(); ++t) {
                CHECK(oracle::max_abs_diff(m.per_feature[t], o.per_feature[t]) < 1e-10);
                CHECK((m.per_node[t] - o.per_node[t]).cwiseAbs().maxCoeff() < 1e-10);
            }
            CHECK(std::abs(m.seeded_relevance - o.seeded) < 1e-10);
            CHECK(std::abs(m.bias_absorbed - o.bias_absorbed) < 1e-10);
        }
    }
    SUBCASE("zero model gives zero relevance everywhere") {
        Rng rng(2);
        const auto g = fixture::random_graph(rng, 4, 2, 3);
        const RelevanceMap m = explain(g, zero_params(small_config()), Query::node(2));
        CHECK(m.seed_value == 0.0);
        for (const Matrix& r : m.per_feature) CHECK(r.isZero(0.0));
    }
    SUBCASE("per_node is the row L1 of per_feature, and output is deterministic") {
        const fixture::Instance in = fixture::small_instance(5);
        const RelevanceMap a = explain(in.graph, in.params, in.query);
        const RelevanceMap b = explain(in.graph, in.params, in.query);
        for (std::size_t t = 0; t < a.per_feature.size(); ++t) {
            CHECK(a.per_node[t] == a.per_feature[t].cwiseAbs().rowwise().sum());
            CHECK(a.per_feature[t] == b.per_feature[t]);
        }
        CHECK(a.method == "dgx");
        CHECK(a.query == in.query);
    }
    SUBCASE("node isolated at every step gets nothing") {
        Rng rng(4);
        auto g = fixture::random_graph(rng, 5, 2, 3, 0.8);
        for (auto& s : g.snapshots) {
            s.adjacency.row(4).setZero();
            s.adjacency.col(4).setZero();
        }
        const ModelParams p = init_params(small_config(HeadKind::link_prediction), 4);
        const RelevanceMap m = explain(g, p, Query::link(0, 1));
        for (const Vector& v : m.per_node) CHECK(v(4) == 0.0);
        CHECK(m.node_totals()(0) > 0.0);
    }
    SUBCASE("relabelling nodes permutes the scores") {
        const fixture::Instance in = fixture::small_instance(7);
        const auto n = static_cast<Eigen::Index>(in.graph.num_nodes());
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(n);
        for (Eigen::Index i = 0; i < n; ++i) perm.indices()(i) = static_cast<int>((i + 1) % n);
        DynamicGraph g = in.graph;
        for (auto& s : g.snapshots) {
            s.adjacency = perm * s.adjacency * perm.transpose();
            s.features = perm * s.features;
        }
        const auto map = [&](std::size_t u) { return static_cast<std::size_t>(perm.indices()(static_cast<Eigen::Index>(u))); };
        const Query q = in.query.is_link ? Query::link(map(in.query.source), map(in.query.target))
                                         : Query::node(map(in.query.source));
        const RelevanceMap a = explain(in.graph, in.params, in.query);
        const RelevanceMap b = explain(g, in.params, q);
        for (std::size_t t = 0; t < a.per_node.size(); ++t)
            CHECK((perm * a.per_node[t] - b.per_node[t]).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("scaling the output layer scales every score") {
        fixture::Instance in = fixture::small_instance(10);
        const ExplainerConfig tiny{1e-12};
        const RelevanceMap a = explain(in.graph, in.params, in.query, tiny);
        in.params.head.w2 *= 3.0;
        in.params.head.b2 *= 3.0;
        const RelevanceMap b = explain(in.graph, in.params, in.query, tiny);
        CHECK(b.seed_value == doctest::Approx(3.0 * a.seed_value).epsilon(1e-12));
        for (std::size_t t = 0; t < a.per_feature.size(); ++t)
            CHECK(oracle::max_abs_diff(b.per_feature[t], 3.0 * a.per_feature[t]) <
                  1e-8 * (1.0 + a.per_feature[t].cwiseAbs().maxCoeff()));
    }
    SUBCASE("invalid config and query") {
        const fixture::Instance in = fixture::small_instance(2);
        CHECK_THROWS_AS(explain(in.graph, in.params, in.query, {-1.0}), ValidationError);
        CHECK_THROWS_AS(explain(in.graph, in.params, Query::node(99)), ValidationError);
    }
}
