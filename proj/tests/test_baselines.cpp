#include "dgx/baselines.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace dgx;

TEST_CASE("row_norms") {
    Matrix m(2, 3);
    m << 1, -2, 0.5, 0, 0, 0;
    CHECK(row_norms(m, NodeNorm::l1)(0) == 3.5);
    CHECK(row_norms(m, NodeNorm::l2)(0) == doctest::Approx(std::sqrt(5.25)));
    CHECK(row_norms(m, NodeNorm::l1)(1) == 0.0);
}

TEST_CASE("zero model gives an all-zero saliency map") {
    ModelConfig mc;
    mc.head_kind = HeadKind::node_regression;
    ModelParams p = zero_params(mc);
    p.head.b1.setConstant(0.5);
    Rng rng(3);
    const auto g = fixture::random_graph(rng, 5, 2, 2);
    for (const SaliencyMap& m : {sensitivity_analysis(g, p, Query::node(0)), grad_times_input(g, p, Query::node(0))}) {
        for (const Matrix& r : m.per_feature) CHECK(r.isZero(0.0));
        for (const Vector& v : m.per_node) CHECK(v.isZero(0.0));
    }
}

TEST_CASE("SA is the absolute input gradient") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const fixture::Instance in = fixture::small_instance(s);
        const SaliencyMap m = sensitivity_analysis(in.graph, in.params, in.query);
        const auto fd = oracle::fd_input_gradient(in.graph, in.params, in.query, 1e-5);
        CAPTURE(s);
        CHECK(m.method == "sa");
        CHECK(m.seed_value == doctest::Approx(predict(in.graph, in.params, in.query)));
        for (std::size_t t = 0; t < fd.size(); ++t) {
            CHECK(m.per_feature[t].minCoeff() >= 0.0);
            CHECK(oracle::max_abs_diff(m.per_feature[t], fd[t].cwiseAbs()) < 1e-6);
            CHECK((m.per_node[t] - m.per_feature[t].rowwise().norm()).cwiseAbs().maxCoeff() < 1e-15);
        }
    }
}

TEST_CASE("SA ignores the sign of the output") {
    fixture::Instance in = fixture::small_instance(4);
    const SaliencyMap a = sensitivity_analysis(in.graph, in.params, in.query);
    in.params.head.w2 = -in.params.head.w2;
    in.params.head.b2 = -in.params.head.b2;
    const SaliencyMap b = sensitivity_analysis(in.graph, in.params, in.query);
    CHECK(b.seed_value == -a.seed_value);
    for (std::size_t t = 0; t < a.per_node.size(); ++t) CHECK(oracle::max_abs_diff(a.per_feature[t], b.per_feature[t]) < 1e-15);
}

TEST_CASE("Grad x Input") {
    SUBCASE("matches gradient times input from central differences") {
        for (std::uint64_t s = 10; s < 20; ++s) {
            const fixture::Instance in = fixture::small_instance(s, Activation::tanh);
            const SaliencyMap m = grad_times_input(in.graph, in.params, in.query);
            const auto fd = oracle::fd_input_gradient(in.graph, in.params, in.query, 1e-5);
            CHECK(m.method == "gradinput");
            for (std::size_t t = 0; t < fd.size(); ++t) {
                const Matrix want = fd[t].cwiseProduct(in.graph.snapshots[t].features);
                CHECK(oracle::max_abs_diff(m.per_feature[t], want) < 1e-6);
                CHECK((m.per_node[t] - m.per_feature[t].cwiseAbs().rowwise().sum()).cwiseAbs().maxCoeff() < 1e-15);
            }
        }
    }
    SUBCASE("zero input rows score zero") {
        fixture::Instance in = fixture::small_instance(6);
        for (auto& s : in.graph.snapshots) s.features.row(0).setZero();
        const SaliencyMap m = grad_times_input(in.graph, in.params, in.query);
        for (const Vector& v : m.per_node) CHECK(v(0) == 0.0);
    }
    SUBCASE("L2 aggregation on request") {
        const fixture::Instance in = fixture::small_instance(1);
        const SaliencyMap m = grad_times_input(in.graph, in.params, in.query, NodeNorm::l2);
        for (std::size_t t = 0; t < m.per_node.size(); ++t)
            CHECK((m.per_node[t] - m.per_feature[t].rowwise().norm()).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("baselines reject bad queries") {
    const fixture::Instance in = fixture::small_instance(0);
    CHECK_THROWS_AS(sensitivity_analysis(in.graph, in.params, Query::node(50)), ValidationError);
    CHECK_THROWS_AS(grad_times_input(in.graph, in.params, Query::link(0, 1)), ValidationError);
}
