#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "test_util.hpp"

namespace lgg {
namespace {

EmbeddingMatrix emb(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
    Index i = 0;
    for (const auto& r : rows) {
        Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return EmbeddingMatrix(m);
}

Matrix three_by_three() {
    Matrix s(3, 3);
    s << 1, .9, .2, .9, 1, .5, .2, .5, 1;
    return s;
}

TEST(Cosine, IdenticalAndOrthogonal) {
    const Matrix same = cosine_similarity(emb({{1, 0}, {1, 0}}));
    EXPECT_EQ(same, Matrix::Ones(2, 2));
    const Matrix orth = cosine_similarity(emb({{1, 0}, {0, 1}}));
    EXPECT_EQ(orth(0, 1), 0.0);
    EXPECT_EQ(orth(1, 0), 0.0);
}

TEST(Cosine, FortyFiveDegrees) {
    // <(1,0),(1,1)> / (1 * sqrt 2)
    const Matrix s = cosine_similarity(emb({{1, 0}, {1, 1}}));
    EXPECT_NEAR(s(0, 1), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(s(0, 1), 0.70710678, 1e-8);
}

TEST(Cosine, ZeroRowNamed) {
    try {
        cosine_similarity(emb({{1, 0}, {0, 0}}));
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    }
}

TEST(Rbf, ExplicitGamma) {
    const Matrix s = rbf_similarity(emb({{0}, {1}}), 1.0);
    EXPECT_NEAR(s(0, 1), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(s(0, 1), 0.36787944, 1e-8);
    EXPECT_EQ(s(0, 0), 1.0);
}

TEST(Rbf, MedianHeuristicThreePoints) {
    // squared distances {1, 4, 1} -> median 1 -> gamma 0.5
    const Matrix s = rbf_similarity(emb({{0}, {1}, {2}}));
    EXPECT_NEAR(s(0, 1), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(s(0, 2), std::exp(-2.0), 1e-15);
}

TEST(Rbf, MedianHeuristicDegenerate) {
    EXPECT_EQ(median_heuristic_gamma(Matrix::Zero(3, 3)), 1.0);
    const Matrix s = rbf_similarity(emb({{2, 2}, {2, 2}}));
    EXPECT_EQ(s(0, 1), 1.0);
}

TEST(Rbf, InvalidGamma) {
    EXPECT_THROW(rbf_similarity(emb({{0}, {1}}), 0.0), ConfigError);
    EXPECT_THROW(rbf_similarity(emb({{0}, {1}}), -1.0), ConfigError);
}

TEST(Kernels, SymmetricUnitDiagonalAndRange) {
    std::mt19937_64 gen(5);
    for (int t = 0; t < 20; ++t) {
        const EmbeddingMatrix x(testing::random_matrix(gen, 30, 6));
        const Matrix c = cosine_similarity(x);
        const Matrix r = rbf_similarity(x);
        EXPECT_LE((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((r - r.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_EQ(c.diagonal(), Vector::Ones(30));
        EXPECT_EQ(r.diagonal(), Vector::Ones(30));
        EXPECT_GE(c.minCoeff(), -1.0);
        EXPECT_LE(c.maxCoeff(), 1.0);
        EXPECT_GT(r.minCoeff(), 0.0);
        EXPECT_LE(r.maxCoeff(), 1.0);
    }
}

TEST(Knn, RowArgmax) {
    const SparseGraph g = knn_threshold(three_by_three(), 1, false);
    const std::vector<Edge> expected{{0, 1, .9}, {1, 0, .9}, {2, 1, .5}};
    EXPECT_EQ(g.edges(), expected);
    EXPECT_FALSE(g.symmetric());
}

TEST(Knn, Binarize) {
    const SparseGraph g = knn_threshold(three_by_three(), 1, true);
    const std::vector<Edge> expected{{0, 1, 1}, {1, 0, 1}, {2, 1, 1}};
    EXPECT_EQ(g.edges(), expected);
}

TEST(Knn, VacuousThresholdKeepsAllOffDiagonal) {
    const Matrix s = three_by_three();
    const SparseGraph g = knn_threshold(s, 5, false);
    EXPECT_EQ(g.edges().size(), 6u);
    Matrix dense = s;
    dense.diagonal().setZero();
    EXPECT_EQ(g.to_dense(), dense);
}

TEST(Knn, TiesGoToSmallerIndex) {
    const Matrix s = Matrix::Ones(4, 4);
    const SparseGraph g = knn_threshold(s, 2, false);
    const std::vector<Edge> expected{{0, 1, 1}, {0, 2, 1}, {1, 0, 1}, {1, 2, 1},
                                     {2, 0, 1}, {2, 1, 1}, {3, 0, 1}, {3, 1, 1}};
    EXPECT_EQ(g.edges(), expected);
}

TEST(Knn, NegativeSimilarityStoredAsZero) {
    Matrix s(2, 2);
    s << 1, -0.5, -0.5, 1;
    const SparseGraph g = knn_threshold(s, 1, false);
    ASSERT_EQ(g.edges().size(), 2u);
    EXPECT_EQ(g.edges()[0].w, 0.0);
}

TEST(Knn, Errors) {
    EXPECT_THROW(knn_threshold(Matrix::Ones(1, 1), 1, false), DataError);
    EXPECT_THROW(knn_threshold(Matrix::Ones(3, 3), 0, false), ConfigError);
    EXPECT_THROW(knn_threshold(Matrix::Ones(2, 3), 1, false), DataError);
}

TEST(Knn, RowCountsProperty) {
    std::mt19937_64 gen(9);
    std::uniform_int_distribution<int> nd(2, 40), kd(1, 45);
    for (int t = 0; t < 100; ++t) {
        const int n = nd(gen);
        const int k = kd(gen);
        const EmbeddingMatrix x(testing::random_matrix(gen, n, 4));
        const SparseGraph g = knn_threshold(rbf_similarity(x), k, t % 2 == 0);
        std::vector<int> count(static_cast<std::size_t>(n), 0);
        for (const auto& e : g.edges()) {
            EXPECT_NE(e.i, e.j);
            ++count[e.i];
        }
        for (int c : count) EXPECT_EQ(c, std::min(k, n - 1));
    }
}

TEST(Symmetrize, UnionRule) {
    const SparseGraph g(3, {{0, 1, .9}, {2, 1, .5}}, false);
    const SparseGraph s = symmetrize(g);
    const std::vector<Edge> expected{{0, 1, .9}, {1, 0, .9}, {1, 2, .5}, {2, 1, .5}};
    EXPECT_EQ(s.edges(), expected);
    EXPECT_TRUE(s.symmetric());
}

TEST(Symmetrize, MaxRule) {
    const SparseGraph g(2, {{0, 1, .3}, {1, 0, .7}}, false);
    const SparseGraph s = symmetrize(g);
    EXPECT_EQ(*s.weight(0, 1), .7);
    EXPECT_EQ(*s.weight(1, 0), .7);
}

TEST(Symmetrize, Idempotent) {
    std::mt19937_64 gen(17);
    for (int t = 0; t < 50; ++t) {
        const SparseGraph g = testing::random_graph(gen, 25, 0.2, false);
        const SparseGraph once = symmetrize(g);
        EXPECT_EQ(symmetrize(once), once);
    }
    const SparseGraph sym = testing::random_graph(gen, 10, 0.5, true);
    EXPECT_EQ(symmetrize(sym), sym);
}

TEST(Normalize, RegularBinaryGraph) {
    // cycle of 6: 2-regular
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < 6; ++i) {
        edges.push_back({i, (i + 1) % 6, 1.0});
        edges.push_back({(i + 1) % 6, i, 1.0});
    }
    const SparseGraph g = degree_normalize(SparseGraph(6, edges, true));
    for (const auto& e : g.edges()) EXPECT_DOUBLE_EQ(e.w, 0.5);
}

TEST(Normalize, SingleEdge) {
    const double w = 0.37;
    const SparseGraph g = degree_normalize(SparseGraph(2, {{0, 1, w}, {1, 0, w}}, true));
    EXPECT_DOUBLE_EQ(*g.weight(0, 1), 1.0);
}

TEST(Normalize, IsolatedVertexStaysIsolated) {
    const SparseGraph g = degree_normalize(SparseGraph(3, {{0, 1, 2.0}, {1, 0, 2.0}}, true));
    EXPECT_EQ(g.edges().size(), 2u);
    for (double d : g.degrees()) EXPECT_TRUE(std::isfinite(d));
    EXPECT_EQ(g.degrees()[2], 0.0);
}

TEST(Normalize, SpectralRadiusAtMostOne) {
    std::mt19937_64 gen(23);
    std::uniform_int_distribution<int> nd(2, 50);
    for (int t = 0; t < 50; ++t) {
        const SparseGraph g = degree_normalize(testing::random_graph(gen, static_cast<std::size_t>(nd(gen)), 0.3, true));
        const Matrix a = g.to_dense();
        EXPECT_LE(testing::power_iteration_radius(a), 1.0 + 1e-9);
        Eigen::SelfAdjointEigenSolver<Matrix> es(a);
        EXPECT_LE(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-9);
    }
}

TEST(Laplacian, SmallCases) {
    const double w = 1.5;
    const auto l = combinatorial_laplacian(SparseGraph(2, {{0, 1, w}, {1, 0, w}}, true));
    Matrix expected(2, 2);
    expected << w, -w, -w, w;
    EXPECT_EQ(Matrix(l), expected);

    EXPECT_EQ(Matrix(combinatorial_laplacian(SparseGraph(4, {}, true))), Matrix::Zero(4, 4));

    std::vector<Edge> tri;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j) tri.push_back({i, j, 1.0});
    Matrix t(3, 3);
    t << 2, -1, -1, -1, 2, -1, -1, -1, 2;
    EXPECT_EQ(Matrix(combinatorial_laplacian(SparseGraph(3, tri, true))), t);
}

TEST(Laplacian, RejectsAsymmetric) {
    EXPECT_THROW(combinatorial_laplacian(SparseGraph(2, {{0, 1, 1.0}}, false)), DataError);
}

TEST(Laplacian, RowSumsZeroAndPsd) {
    std::mt19937_64 gen(29);
    for (int t = 0; t < 30; ++t) {
        const auto l = Matrix(combinatorial_laplacian(testing::random_graph(gen, 30, 0.25, true)));
        EXPECT_LE(l.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
        for (int s = 0; s < 100; ++s) {
            const Matrix x = testing::random_matrix(gen, 30, 1);
            EXPECT_GE((x.transpose() * l * x)(0, 0), -1e-12);
        }
    }
}

TEST(SparseGraph, Invariants) {
    EXPECT_THROW(SparseGraph(2, {{0, 0, 1.0}}, false), DataError);
    EXPECT_THROW(SparseGraph(2, {{0, 1, -1.0}}, false), DataError);
    EXPECT_THROW(SparseGraph(2, {{0, 1, 1.0}}, true), DataError);
    EXPECT_THROW(SparseGraph(2, {{0, 1, 1.0}, {1, 0, 2.0}}, true), DataError);
    EXPECT_THROW(SparseGraph(2, {{0, 1, 1.0}, {0, 1, 1.0}}, false), DataError);
}

TEST(BuildLgg, VacuousCosine) {
    std::mt19937_64 gen(31);
    const EmbeddingMatrix x(testing::random_matrix(gen, 7, 3));
    const SparseGraph g = build_lgg(x, {Kernel::cosine, 6, false, false, false, std::nullopt});
    Matrix expected = cosine_similarity(x).cwiseMax(0.0);
    expected.diagonal().setZero();
    EXPECT_EQ(g.to_dense(), expected);
}

TEST(BuildLgg, VpmRowOnThreePoints) {
    // RBF, k = 1, binarize, no symmetrize, normalize.
    // Points 0, 1, 3 on a line: nearest neighbours 0->1, 1->0, 2->1.
    // Row sums all 1; column sums (1, 2, 0): w_ij = 1 / sqrt(1 * colsum_j).
    const SparseGraph g = build_lgg(emb({{0}, {1}, {3}}), {Kernel::rbf, 1, true, false, true, std::nullopt});
    ASSERT_EQ(g.edges().size(), 3u);
    EXPECT_DOUBLE_EQ(*g.weight(0, 1), 1.0 / std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(*g.weight(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(*g.weight(2, 1), 1.0 / std::sqrt(2.0));
    EXPECT_FALSE(g.symmetric());
}

TEST(BuildLgg, VrRowExceedingN) {
    std::mt19937_64 gen(37);
    const EmbeddingMatrix x(testing::random_matrix(gen, 10, 4).cwiseAbs());
    const SparseGraph g = build_lgg(x, {Kernel::cosine, 20, false, true, false, std::nullopt});
    EXPECT_TRUE(g.symmetric());
    EXPECT_EQ(g.edges().size(), 90u);
}

TEST(BuildLgg, PureFunction) {
    std::mt19937_64 gen(41);
    const EmbeddingMatrix x(testing::random_matrix(gen, 60, 5));
    const GraphConfig cfg{Kernel::rbf, 3, false, true, true, std::nullopt};
    EXPECT_EQ(build_lgg(x, cfg), build_lgg(x, cfg));
}

TEST(GraphJson, RoundTrip) {
    const SparseGraph g(3, {{2, 1, 0.25}, {0, 1, 0.5}}, false);
    const auto j = graph_to_json(g);
    EXPECT_EQ(j["edges"][0][0], 0);
    EXPECT_EQ(graph_from_json(j), g);
}

}  // namespace
}  // namespace lgg
