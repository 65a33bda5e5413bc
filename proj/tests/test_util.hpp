// Shared fixtures and independent oracles for the test suites.
#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lgg/lgg.hpp"

namespace lgg::testing {

/// Dense tr(Y^T (D - A) Y); independent of the edge-list path.
inline double dense_trace_oracle(const Matrix& adjacency, const Matrix& y) {
    const Vector deg = adjacency.rowwise().sum();
    const Matrix lap = Matrix(deg.asDiagonal()) - adjacency;
    return (y.transpose() * lap * y).trace();
}

/// Random graph with each ordered pair present with probability `density`.
inline SparseGraph random_graph(std::mt19937_64& gen, std::size_t n, double density, bool symmetric) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = symmetric ? i + 1 : 0; j < n; ++j) {
            if (i == j || u(gen) >= density) continue;
            const double w = u(gen) * 3.0;
            edges.push_back({i, j, w});
            if (symmetric) edges.push_back({j, i, w});
        }
    }
    return SparseGraph(n, std::move(edges), symmetric);
}

inline LabelMatrix random_one_hot(std::mt19937_64& gen, std::size_t n, int classes) {
    std::uniform_int_distribution<int> c(0, classes - 1);
    std::vector<int> labels(n);
    for (auto& l : labels) l = c(gen);
    return one_hot(labels, classes);
}

/// Rows drawn uniformly-ish from the simplex (normalized exponentials).
inline LabelMatrix random_simplex(std::mt19937_64& gen, std::size_t n, int classes) {
    std::exponential_distribution<double> e(1.0);
    Matrix y(static_cast<Index>(n), classes);
    for (Index i = 0; i < y.rows(); ++i) {
        for (Index c = 0; c < y.cols(); ++c) y(i, c) = e(gen);
        y.row(i) /= y.row(i).sum();
    }
    return LabelMatrix(std::move(y));
}

inline Matrix random_matrix(std::mt19937_64& gen, Index rows, Index cols) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
    return m;
}

/// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("lgg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Largest |eigenvalue| of a symmetric matrix by power iteration.
inline double power_iteration_radius(const Matrix& a, int iters = 2000) {
    Vector v = Vector::Ones(a.rows()).normalized();
    double lambda = 0.0;
    for (int t = 0; t < iters; ++t) {
        Vector w = a * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        lambda = norm;
        v = w / norm;
    }
    return lambda;
}

struct GradCheck {
    double max_rel = 0.0;
    double max_abs = 0.0;
    std::size_t params = 0;
};

/// Compares analytic gradients with central differences on every parameter.
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck gradient_check(const RefNet& net, const Matrix& x, const std::vector<int>& y, double eps = 1e-5,
                                double floor = 1e-8) {
    Gradients g;
    net.loss(x, y, &g);
    RefNet probe = net;
    GradCheck out;
    auto visit = [&](double& param, double analytic) {
        const double saved = param;
        param = saved + eps;
        const double up = probe.loss(x, y);
        param = saved - eps;
        const double down = probe.loss(x, y);
        param = saved;
        const double numeric = (up - down) / (2 * eps);
        const double diff = std::abs(analytic - numeric);
        out.max_abs = std::max(out.max_abs, diff);
        out.max_rel = std::max(out.max_rel, diff / std::max({std::abs(analytic), std::abs(numeric), floor}));
        ++out.params;
    };
    for (std::size_t l = 0; l < probe.layers().size(); ++l) {
        auto& layer = probe.layers()[l];
        for (Index i = 0; i < layer.w.size(); ++i) visit(layer.w.data()[i], g.w[l].data()[i]);
        for (Index i = 0; i < layer.b.size(); ++i) visit(layer.b.data()[i], g.b[l].data()[i]);
    }
    return out;
}

}  // namespace lgg::testing
