#pragma once

#include "lgg/error.hpp"
#include "lgg/graph.hpp"
#include "lgg/matrix.hpp"

namespace lgg {

namespace detail {

inline void check_dims(const SparseGraph& g, const LabelMatrix& y) {
    if (static_cast<Index>(g.n()) != y.rows()) {
        throw DataError("graph has " + std::to_string(g.n()) + " vertices but label signal has " +
                        std::to_string(y.rows()) + " rows");
    }
}

}  // namespace detail

/// sigma = 1/2 * sum_{(i,j) stored} w_ij * ||Y_i - Y_j||^2, which equals
/// tr(Y^T L Y) when the graph is symmetric.
inline double label_variation(const SparseGraph& g, const LabelMatrix& y) {
    detail::check_dims(g, y);
    const Matrix& m = y.data();
    double sigma = 0.0;
    for (const auto& e : g.edges()) {
        sigma += e.w * (m.row(static_cast<Index>(e.i)) - m.row(static_cast<Index>(e.j))).squaredNorm();
    }
    return 0.5 * sigma;
}

/// 1/2 * sum of stored edge weights (the undirected total for symmetric graphs).
inline double total_edge_weight(const SparseGraph& g) {
    double w = 0.0;
    for (const auto& e : g.edges()) w += e.w;
    return 0.5 * w;
}

/// sigma / W; lies in [0, 2] for row-stochastic labels and is 0 for edgeless graphs.
inline double normalized_label_variation(const SparseGraph& g, const LabelMatrix& y) {
    const double sigma = label_variation(g, y);
    const double w = total_edge_weight(g);
    return w > 0.0 ? sigma / w : 0.0;
}

}  // namespace lgg
