// Latent geometry graph construction.
//
// Pipeline: similarity kernel -> k-NN threshold -> (binarize) -> (symmetrize)
// -> (degree normalization). Graphs are stored as sorted edge lists.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Sparse>
#include <json.hpp>

#include "lgg/error.hpp"
#include "lgg/matrix.hpp"

namespace lgg {

enum class Kernel { cosine, rbf };

inline std::string to_string(Kernel k) { return k == Kernel::cosine ? "cosine" : "rbf"; }

inline Kernel kernel_from_string(const std::string& s) {
    if (s == "cosine") return Kernel::cosine;
    if (s == "rbf") return Kernel::rbf;
    throw ConfigError("unknown kernel '" + s + "' (expected cosine or rbf)");
}

struct GraphConfig {
    Kernel kernel = Kernel::cosine;
    int k = 1;
    bool binarize = false;
    bool symmetrize = false;
    bool normalize = false;
    /// RBF bandwidth; empty selects the median heuristic.
    std::optional<double> gamma;

    void validate() const {
        if (k < 1) throw ConfigError("k must be at least 1, got " + std::to_string(k));
        if (gamma && !(*gamma > 0.0 && std::isfinite(*gamma))) {
            throw ConfigError("RBF gamma must be positive, got " + std::to_string(*gamma));
        }
    }

    bool operator==(const GraphConfig&) const = default;
};

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    double w = 0.0;

    bool operator==(const Edge&) const = default;
};

/// Weighted directed adjacency without self-loops, edges sorted by (i, j).
/// `symmetric()` records that every (i, j, w) has a matching (j, i, w).
class SparseGraph {
public:
    SparseGraph() = default;

    SparseGraph(std::size_t n, std::vector<Edge> edges, bool symmetric)
        : n_(n), edges_(std::move(edges)), symmetric_(symmetric) {
        std::sort(edges_.begin(), edges_.end(),
                  [](const Edge& a, const Edge& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
        for (std::size_t e = 0; e < edges_.size(); ++e) {
            const auto& ed = edges_[e];
            if (ed.i >= n_ || ed.j >= n_) throw DataError("edge endpoint out of range");
            if (ed.i == ed.j) throw DataError("self-loop at vertex " + std::to_string(ed.i));
            if (!std::isfinite(ed.w) || ed.w < 0.0) {
                throw DataError("edge (" + std::to_string(ed.i) + "," + std::to_string(ed.j) +
                                ") has invalid weight " + std::to_string(ed.w));
            }
            if (e > 0 && edges_[e - 1].i == ed.i && edges_[e - 1].j == ed.j) {
                throw DataError("duplicate edge (" + std::to_string(ed.i) + "," + std::to_string(ed.j) + ")");
            }
        }
        if (symmetric_) {
            for (const auto& ed : edges_) {
                const auto w = weight(ed.j, ed.i);
                if (!w || *w != ed.w) {
                    throw DataError("graph flagged symmetric but edge (" + std::to_string(ed.i) + "," +
                                    std::to_string(ed.j) + ") has no equal mirror");
                }
            }
        }
    }

    std::size_t n() const { return n_; }
    const std::vector<Edge>& edges() const { return edges_; }
    bool symmetric() const { return symmetric_; }

    std::optional<double> weight(std::size_t i, std::size_t j) const {
        const auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{i, j},
                                         [](const Edge& e, const std::pair<std::size_t, std::size_t>& key) {
                                             return std::tie(e.i, e.j) < std::tie(key.first, key.second);
                                         });
        if (it != edges_.end() && it->i == i && it->j == j) return it->w;
        return std::nullopt;
    }

    /// Row sums (out-degrees); this is D for symmetric graphs.
    std::vector<double> degrees() const {
        std::vector<double> d(n_, 0.0);
        for (const auto& e : edges_) d[e.i] += e.w;
        return d;
    }

    /// Column sums (in-degrees).
    std::vector<double> in_degrees() const {
        std::vector<double> d(n_, 0.0);
        for (const auto& e : edges_) d[e.j] += e.w;
        return d;
    }

    Matrix to_dense() const {
        Matrix a = Matrix::Zero(static_cast<Index>(n_), static_cast<Index>(n_));
        for (const auto& e : edges_) a(static_cast<Index>(e.i), static_cast<Index>(e.j)) = e.w;
        return a;
    }

    bool operator==(const SparseGraph&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    bool symmetric_ = false;
};

inline Matrix cosine_similarity(const EmbeddingMatrix& x) {
    const Matrix& m = x.data();
    const Index n = m.rows();
    Vector norms(n);
    for (Index i = 0; i < n; ++i) {
        norms(i) = m.row(i).norm();
        if (norms(i) == 0.0) {
            throw DataError("cosine similarity undefined: row " + std::to_string(i) + " has zero norm");
        }
    }
    Matrix s(n, n);
    for (Index i = 0; i < n; ++i) {
        s(i, i) = 1.0;
        for (Index j = i + 1; j < n; ++j) {
            const double v = std::clamp(m.row(i).dot(m.row(j)) / (norms(i) * norms(j)), -1.0, 1.0);
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return s;
}

inline Matrix pairwise_squared_distances(const Matrix& m) {
    const Index n = m.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const double v = (m.row(i) - m.row(j)).squaredNorm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

/// gamma = 1 / (2 * median_{i<j} ||x_i - x_j||^2), or 1 when that median is 0.
/// An even pair count uses the mean of the two central values.
inline double median_heuristic_gamma(const Matrix& sq_dist) {
    const Index n = sq_dist.rows();
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) v.push_back(sq_dist(i, j));
    if (v.empty()) return 1.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double median = v[mid];
    if (v.size() % 2 == 0) {
        const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (lower + median);
    }
    return median > 0.0 ? 1.0 / (2.0 * median) : 1.0;
}

inline Matrix rbf_similarity(const EmbeddingMatrix& x, std::optional<double> gamma = std::nullopt) {
    if (gamma && !(*gamma > 0.0 && std::isfinite(*gamma))) {
        throw ConfigError("RBF gamma must be positive, got " + std::to_string(*gamma));
    }
    Matrix d = pairwise_squared_distances(x.data());
    const double g = gamma ? *gamma : median_heuristic_gamma(d);
    d = (-g * d.array()).exp().matrix();
    // Keep entries inside (0, 1] even for far-apart points.
    return d.cwiseMax(std::numeric_limits<double>::min());
}

/// Keep, per row, the k largest off-diagonal similarities (ties toward the
/// smaller column). Negative similarities are stored as weight 0.
inline SparseGraph knn_threshold(const Matrix& s, int k, bool binarize) {
    if (k < 1) throw ConfigError("k must be at least 1, got " + std::to_string(k));
    if (s.rows() != s.cols()) throw DataError("similarity matrix must be square");
    if (s.rows() < 2) throw DataError("k-NN graph needs at least 2 vertices, got " + std::to_string(s.rows()));
    if (!s.allFinite()) throw DataError("similarity matrix contains non-finite values");
    const auto n = static_cast<std::size_t>(s.rows());
    const std::size_t keep = std::min(static_cast<std::size_t>(k), n - 1);

    std::vector<Edge> edges;
    edges.reserve(n * keep);
    std::vector<std::size_t> cand(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = s.row(static_cast<Index>(i));
        std::size_t c = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) cand[c++] = j;
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double va = row(static_cast<Index>(a));
                              const double vb = row(static_cast<Index>(b));
                              return va != vb ? va > vb : a < b;
                          });
        for (std::size_t t = 0; t < keep; ++t) {
            const std::size_t j = cand[t];
            edges.push_back({i, j, binarize ? 1.0 : std::max(0.0, row(static_cast<Index>(j)))});
        }
    }
    return SparseGraph(n, std::move(edges), false);
}

/// Undirected union of the directed edges; both directions get the larger weight.
inline SparseGraph symmetrize(const SparseGraph& g) {
    std::vector<Edge> both;
    both.reserve(2 * g.edges().size());
    for (const auto& e : g.edges()) {
        both.push_back(e);
        both.push_back({e.j, e.i, e.w});
    }
    std::sort(both.begin(), both.end(), [](const Edge& a, const Edge& b) {
        return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });
    std::vector<Edge> merged;
    merged.reserve(both.size());
    for (const auto& e : both) {
        if (!merged.empty() && merged.back().i == e.i && merged.back().j == e.j) {
            merged.back().w = std::max(merged.back().w, e.w);
        } else {
            merged.push_back(e);
        }
    }
    return SparseGraph(g.n(), std::move(merged), true);
}

/// D_r^{-1/2} A D_c^{-1/2} with row/column degree diagonals; zero degrees leave
/// the vertex isolated.
inline SparseGraph degree_normalize(const SparseGraph& g) {
    const auto dr = g.degrees();
    const auto dc = g.symmetric() ? dr : g.in_degrees();
    std::vector<Edge> edges;
    edges.reserve(g.edges().size());
    for (const auto& e : g.edges()) {
        const double denom = dr[e.i] * dc[e.j];
        edges.push_back({e.i, e.j, denom > 0.0 ? e.w / std::sqrt(denom) : 0.0});
    }
    return SparseGraph(g.n(), std::move(edges), g.symmetric());
}

/// L = D - A for a symmetric graph.
inline Eigen::SparseMatrix<double, Eigen::RowMajor> combinatorial_laplacian(const SparseGraph& g) {
    if (!g.symmetric()) {
        throw DataError("combinatorial Laplacian requires a symmetric graph");
    }
    const auto deg = g.degrees();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(g.edges().size() + g.n());
    for (std::size_t i = 0; i < g.n(); ++i) t.emplace_back(static_cast<int>(i), static_cast<int>(i), deg[i]);
    for (const auto& e : g.edges()) t.emplace_back(static_cast<int>(e.i), static_cast<int>(e.j), -e.w);
    Eigen::SparseMatrix<double, Eigen::RowMajor> l(static_cast<Index>(g.n()), static_cast<Index>(g.n()));
    l.setFromTriplets(t.begin(), t.end());
    return l;
}

inline SparseGraph build_lgg(const EmbeddingMatrix& x, const GraphConfig& cfg) {
    cfg.validate();
    const Matrix s = cfg.kernel == Kernel::cosine ? cosine_similarity(x) : rbf_similarity(x, cfg.gamma);
    SparseGraph g = knn_threshold(s, cfg.k, cfg.binarize);
    if (cfg.symmetrize) g = symmetrize(g);
    if (cfg.normalize) g = degree_normalize(g);
    return g;
}

inline nlohmann::json graph_to_json(const SparseGraph& g) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges()) edges.push_back({e.i, e.j, e.w});
    return {{"n", g.n()}, {"symmetric", g.symmetric()}, {"edges", std::move(edges)}};
}

inline SparseGraph graph_from_json(const nlohmann::json& j) {
    try {
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges")) {
            edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>()});
        }
        return SparseGraph(j.at("n").get<std::size_t>(), std::move(edges), j.at("symmetric").get<bool>());
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("malformed graph dump: ") + ex.what());
    }
}

inline void write_graph(const std::string& path, const SparseGraph& g) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << graph_to_json(g).dump() << '\n';
}

}  // namespace lgg
