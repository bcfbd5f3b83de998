#include "dgx/graph.hpp"
#include "dgx/io.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace dgx;

namespace {

Snapshot snap(Matrix a, Matrix x, int t = 1) { return {std::move(a), std::move(x), t}; }

}  // namespace

TEST_CASE("empty 2x2 graph normalizes to identity") {
    const Matrix v = normalize_adjacency(Matrix::Zero(2, 2)).matrix;
    CHECK(v == Matrix::Identity(2, 2));
}

TEST_CASE("single edge normalizes to all halves") {
    Matrix a(2, 2);
    a << 0, 1, 1, 0;
    const Matrix v = normalize_adjacency(a).matrix;
    CHECK(v == Matrix::Constant(2, 2, 0.5));
}

TEST_CASE("3-node path matches the numpy golden file") {
    const auto j = read_json_file(std::string(DGX_DATA_DIR) + "/golden/path3_normalized.json");
    Matrix a(3, 3), want(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) {
            a(i, k) = j["adjacency"][i][k].get<double>();
            want(i, k) = j["normalized"][i][k].get<double>();
        }
    CHECK(oracle::max_abs_diff(normalize_adjacency(a).matrix, want) < 1e-15);
}

TEST_CASE("normalization: symmetry, row bound and loop oracle on random graphs") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const auto n = static_cast<Eigen::Index>(1 + rng.below(8));
        Matrix a = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (rng.uniform() < 0.5) a(i, j) = a(j, i) = 1;
        const Matrix v = normalize_adjacency(a).matrix;
        CHECK((v - v.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(oracle::max_abs_diff(v, oracle::normalize(a)) < 1e-14);
        CHECK(v.minCoeff() >= 0.0);
        CHECK(v.maxCoeff() <= 1.0);
        // Row sums of D^-1/2 (A+I) D^-1/2 stay below sqrt(max degree + 1).
        for (Eigen::Index i = 0; i < n; ++i) CHECK(v.row(i).sum() <= std::sqrt(static_cast<double>(n)) + 1e-12);
        CHECK(normalize_adjacency(a).matrix == v);  // deterministic bytes
    }
}

TEST_CASE("normalization errors name the offending entry") {
    CHECK_THROWS_WITH_AS(normalize_adjacency(Matrix::Zero(2, 3)), doctest::Contains("square"), ValidationError);
    Matrix a = Matrix::Zero(3, 3);
    a(1, 2) = -1;
    CHECK_THROWS_WITH_AS(normalize_adjacency(a), doctest::Contains("(1,2)"), ValidationError);
    a(1, 2) = std::nan("");
    CHECK_THROWS_WITH_AS(normalize_adjacency(a), doctest::Contains("(1,2)"), ValidationError);
}

TEST_CASE("validate_dynamic_graph") {
    DynamicGraph g;
    CHECK_THROWS_AS(validate_dynamic_graph(g), ValidationError);

    for (int t = 1; t <= 3; ++t) g.snapshots.push_back(snap(Matrix::Zero(4, 4), Matrix::Ones(4, 2), t));
    CHECK_NOTHROW(validate_dynamic_graph(g));

    SUBCASE("node count change cites t=2") {
        g.snapshots[1] = snap(Matrix::Zero(5, 5), Matrix::Ones(5, 2), 2);
        CHECK_THROWS_WITH_AS(validate_dynamic_graph(g), doctest::Contains("t=2"), ValidationError);
    }
    SUBCASE("NaN feature cites its position") {
        g.snapshots[0].features(3, 0) = std::nan("");
        CHECK_THROWS_WITH_AS(validate_dynamic_graph(g), doctest::Contains("(3,0)"), ValidationError);
    }
    SUBCASE("feature rows must match N") {
        g.snapshots[2].features = Matrix::Ones(3, 2);
        CHECK_THROWS_WITH_AS(validate_dynamic_graph(g), doctest::Contains("t=3"), ValidationError);
    }
    SUBCASE("feature width must stay fixed") {
        g.snapshots[2].features = Matrix::Ones(4, 3);
        CHECK_THROWS_AS(validate_dynamic_graph(g), ValidationError);
    }
}

TEST_CASE("zero_mean_normalize") {
    SUBCASE("constant series becomes zeros") {
        std::vector<Matrix> s(3, Matrix::Constant(4, 2, 5.0));
        for (const Matrix& m : zero_mean_normalize(s)) CHECK(m.isZero(0.0));
    }
    SUBCASE("two steps [1,3] and [5,7]") {
        Matrix a(2, 1), b(2, 1);
        a << 1, 3;
        b << 5, 7;
        std::vector<Matrix> s{a, b};
        const auto out = zero_mean_normalize(s);
        CHECK(out[0](0, 0) == -3.0);
        CHECK(out[0](1, 0) == -1.0);
        CHECK(out[1](0, 0) == 1.0);
        CHECK(out[1](1, 0) == 3.0);
    }
    SUBCASE("random 10x4x3 series has zero column means") {
        Rng rng(11);
        std::vector<Matrix> s;
        for (int t = 0; t < 3; ++t) {
            Matrix m(10, 4);
            for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(-50, 80);
            s.push_back(m);
        }
        const auto out = zero_mean_normalize(s);
        Vector mean = Vector::Zero(4);
        for (const Matrix& m : out) mean += m.colwise().sum().transpose();
        CHECK((mean / 30.0).cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("shape mismatch") {
        std::vector<Matrix> s{Matrix::Zero(2, 1), Matrix::Zero(3, 1)};
        CHECK_THROWS_AS(zero_mean_normalize(s), ValidationError);
    }
}

TEST_CASE("count_undirected_edges ignores the diagonal and direction") {
    Matrix a = Matrix::Zero(3, 3);
    a(0, 0) = 1;
    a(0, 1) = 1;
    a(2, 1) = 1;
    a(1, 2) = 1;
    CHECK(count_undirected_edges(a) == 2);
}
