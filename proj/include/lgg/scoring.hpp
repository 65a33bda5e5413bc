// Generalization scores built on label variation over latent geometry graphs.
//
// Each run draws |G| independent graphs. Graph g uses the random stream
// seeded with (seed ^ g): class-balanced vertex sampling, optional mixup, one
// LGG per needed layer, normalized label variation per layer, then the method
// score. The final score is the median over graphs.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgg/error.hpp"
#include "lgg/graph.hpp"
#include "lgg/manifest.hpp"
#include "lgg/matrix.hpp"
#include "lgg/mixup.hpp"
#include "lgg/parallel.hpp"
#include "lgg/rng.hpp"
#include "lgg/variation.hpp"

namespace lgg {

enum class Method { vr, wcv, vpm };
enum class VertexPolicy { original, mixed_only, original_plus_mixed };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::vr: return "vr";
        case Method::wcv: return "wcv";
        case Method::vpm: return "vpm";
    }
    return "";
}

inline Method method_from_string(const std::string& s) {
    if (s == "vr") return Method::vr;
    if (s == "wcv") return Method::wcv;
    if (s == "vpm") return Method::vpm;
    throw ConfigError("unknown method '" + s + "' (expected vr, wcv or vpm)");
}

inline std::string to_string(VertexPolicy p) {
    switch (p) {
        case VertexPolicy::original: return "original";
        case VertexPolicy::mixed_only: return "mixed";
        case VertexPolicy::original_plus_mixed: return "both";
    }
    return "";
}

inline VertexPolicy vertex_policy_from_string(const std::string& s) {
    if (s == "original") return VertexPolicy::original;
    if (s == "mixed") return VertexPolicy::mixed_only;
    if (s == "both") return VertexPolicy::original_plus_mixed;
    throw ConfigError("unknown vertex policy '" + s + "' (expected mixed, original or both)");
}

/// Layer depths (counted from the end) each method consumes.
inline std::vector<int> required_depths(Method m) {
    return m == Method::vpm ? std::vector<int>{2} : std::vector<int>{1, 2, 3};
}

struct ScorePreset {
    std::string name;
    Method method = Method::vpm;
    int n_graphs = 1;
    GraphConfig graph;
    std::optional<double> alpha;
    bool use_mixup = false;
    VertexPolicy vertex_policy = VertexPolicy::original;
    std::size_t target_vertices = 500;

    static ScorePreset vr() {
        return {"VR", Method::vr, 11, {Kernel::cosine, 20, false, true, false, std::nullopt},
                std::nullopt, false, VertexPolicy::original};
    }
    static ScorePreset wcv() {
        return {"WCV", Method::wcv, 1, {Kernel::rbf, 1, false, true, true, std::nullopt},
                std::nullopt, false, VertexPolicy::original};
    }
    static ScorePreset vpm() {
        return {"VPM", Method::vpm, 80, {Kernel::rbf, 1, true, false, true, std::nullopt},
                2.0, true, VertexPolicy::mixed_only};
    }
    static ScorePreset vpm_final() {
        ScorePreset p = vpm();
        p.name = "VPM (Final)";
        p.n_graphs = 1;
        return p;
    }
    static ScorePreset for_method(Method m) {
        switch (m) {
            case Method::vr: return vr();
            case Method::wcv: return wcv();
            case Method::vpm: return vpm();
        }
        return vpm();
    }

    /// Switching to the original policy turns mixup off and vice versa.
    void set_vertex_policy(VertexPolicy p) {
        vertex_policy = p;
        use_mixup = p != VertexPolicy::original;
        if (use_mixup && !alpha) alpha = 2.0;
    }

    void validate() const {
        graph.validate();
        if (n_graphs < 1) throw ConfigError("number of graphs must be at least 1");
        if (target_vertices < 2) throw ConfigError("target vertex count must be at least 2");
        if (use_mixup) {
            if (!alpha || !(*alpha > 0.0)) throw ConfigError("mixup presets need a positive alpha");
            if (vertex_policy == VertexPolicy::original) {
                throw ConfigError("use_mixup is set but vertex policy is 'original'");
            }
        } else if (vertex_policy != VertexPolicy::original) {
            throw ConfigError("vertex policy '" + to_string(vertex_policy) + "' requires mixup");
        }
    }

    bool operator==(const ScorePreset&) const = default;
};

inline nlohmann::json preset_to_json(const ScorePreset& p) {
    nlohmann::json j = {
        {"name", p.name},
        {"method", to_string(p.method)},
        {"graphs", p.n_graphs},
        {"kernel", to_string(p.graph.kernel)},
        {"k", p.graph.k},
        {"binarize", p.graph.binarize},
        {"symmetrize", p.graph.symmetrize},
        {"normalize", p.graph.normalize},
        {"gamma", p.graph.gamma ? nlohmann::json(*p.graph.gamma) : nlohmann::json("median")},
        {"alpha", p.alpha ? nlohmann::json(*p.alpha) : nlohmann::json(nullptr)},
        {"use_mixup", p.use_mixup},
        {"vertex_policy", to_string(p.vertex_policy)},
        {"target_vertices", p.target_vertices},
    };
    return j;
}

// ---------------------------------------------------------------------------
// Method scores

inline double score_vr(double s1, double s2, double s3) { return (std::abs(s3 - s2) + std::abs(s2 - s1)) / 2.0; }
inline double score_wcv(double s1, double s2, double s3) { return std::max({s1, s2, s3}); }
inline double score_vpm(double s2) { return s2; }

/// Median; an even count averages the two central values.
inline double median(std::vector<double> v) {
    if (v.empty()) throw DataError("median of an empty set");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Vertex sampling

struct VertexSample {
    std::vector<std::size_t> indices;
    /// Requested minus obtained vertices (classes smaller than their quota).
    std::size_t shortfall = 0;
};

/// Class-balanced sampling without replacement. Quota per class is
/// max(1, target / C); the remainder goes one extra to the lowest classes.
inline VertexSample sample_vertices(std::span<const int> labels, int num_classes, std::size_t target,
                                    SplitMix64& rng) {
    if (num_classes < 1) throw ConfigError("num_classes must be positive");
    const auto c = static_cast<std::size_t>(num_classes);
    std::vector<std::vector<std::size_t>> members(c);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw DataError("label at index " + std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
        }
        members[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (std::size_t k = 0; k < c; ++k) {
        if (members[k].empty()) throw DataError("class " + std::to_string(k) + " has no samples");
    }
    const std::size_t quota = std::max<std::size_t>(1, target / c);
    const std::size_t remainder = target > quota * c ? target - quota * c : 0;

    VertexSample out;
    for (std::size_t k = 0; k < c; ++k) {
        auto& pool = members[k];
        const std::size_t want = quota + (k < remainder ? 1 : 0);
        const std::size_t take = std::min(want, pool.size());
        out.shortfall += want - take;
        for (std::size_t t = 0; t < take; ++t) {
            const std::size_t pick = t + static_cast<std::size_t>(rng.below(pool.size() - t));
            std::swap(pool[t], pool[pick]);
            out.indices.push_back(pool[t]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-layer label variation

/// Maps a batch of raw inputs to embeddings keyed by depth_from_end. Must be
/// safe to call concurrently.
using Embedder = std::function<std::map<int, Matrix>(const Matrix& inputs)>;

struct Sigma {
    double normalized = 0.0;  ///< sigma / W
    double raw = 0.0;         ///< sigma
    double weight = 0.0;      ///< W, total undirected edge weight
};

inline Sigma sigma_for_vertices(const EmbeddingMatrix& x, const LabelMatrix& y, const GraphConfig& cfg) {
    const SparseGraph g = build_lgg(x, cfg);
    Sigma s;
    s.raw = label_variation(g, y);
    s.weight = total_edge_weight(g);
    s.normalized = s.weight > 0.0 ? s.raw / s.weight : 0.0;
    return s;
}

/// The vertices of one graph: embeddings per requested depth and their labels.
struct VertexSet {
    std::map<int, EmbeddingMatrix> layers;
    LabelMatrix labels;
    std::size_t original = 0;
    std::size_t mixed = 0;
    std::size_t shortfall = 0;
};

struct ScoreOptions {
    unsigned threads = 0;
    /// Used for mixup presets when set (and the manifest carries inputs);
    /// otherwise the manifest's precomputed mixup section is used.
    const Embedder* embedder = nullptr;
};

namespace detail {

inline std::vector<int> select_labels(const std::vector<int>& labels, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(labels[i]);
    return out;
}

inline void append(VertexSet& set, int depth, const Matrix& rows) {
    auto it = set.layers.find(depth);
    if (it == set.layers.end()) {
        set.layers.emplace(depth, EmbeddingMatrix(rows));
    } else {
        it->second = EmbeddingMatrix(vstack(it->second.data(), rows));
    }
}

inline const LayerTap& require_layer(const DatasetManifest& m, int depth, const std::string& method) {
    const LayerTap* tap = m.layer_at_depth(depth);
    if (!tap) {
        throw DataError("method " + method + " needs a layer with depth_from_end " + std::to_string(depth) +
                        " but the manifest has none");
    }
    return *tap;
}

}  // namespace detail

/// Check that the manifest supplies every layer the preset consumes.
inline void check_manifest_for(const DatasetManifest& m, const ScorePreset& preset, const ScoreOptions& opts = {}) {
    const auto depths = required_depths(preset.method);
    const std::size_t available = m.layers.size();
    if (preset.method != Method::vpm && available < 3) {
        throw DataError("method " + to_string(preset.method) + " needs 3 tapped layers (depth_from_end 1, 2, 3); " +
                        "the manifest provides " + std::to_string(available));
    }
    for (int d : depths) {
        if (preset.vertex_policy != VertexPolicy::mixed_only) detail::require_layer(m, d, to_string(preset.method));
    }
    if (!preset.use_mixup) return;
    if (opts.embedder && m.inputs) return;
    if (!m.mixup) {
        throw DataError("preset " + preset.name + " uses mixup but the manifest has no mixup section and no "
                        "embedder is available; generate a plan with `lgg mixup plan`, run the exporter with "
                        "that plan file, and add its mixup section to the manifest");
    }
    for (int d : depths) {
        if (!m.mixup->layer_at_depth(d)) {
            throw DataError("mixup section has no layer with depth_from_end " + std::to_string(d) +
                            "; re-run the exporter with the plan file and tap that layer");
        }
    }
}

/// Draw the vertices of one graph from `rng` according to the preset.
inline VertexSet draw_vertices(const DatasetManifest& m, const ScorePreset& preset, SplitMix64& rng,
                               const ScoreOptions& opts = {}) {
    const auto depths = required_depths(preset.method);
    const std::size_t target = preset.target_vertices;
    std::size_t n_original = 0;
    std::size_t n_mixed = 0;
    switch (preset.vertex_policy) {
        case VertexPolicy::original: n_original = target; break;
        case VertexPolicy::mixed_only: n_mixed = target; break;
        case VertexPolicy::original_plus_mixed:
            n_original = target / 2;
            n_mixed = target - n_original;
            break;
    }

    VertexSet set;
    Matrix labels(0, m.num_classes);
    if (n_original > 0) {
        const VertexSample sample = sample_vertices(m.labels, m.num_classes, n_original, rng);
        for (int d : depths) {
            const auto& tap = detail::require_layer(m, d, to_string(preset.method));
            detail::append(set, d, select_rows(tap.embeddings.data(), sample.indices));
        }
        const auto lbl = detail::select_labels(m.labels, sample.indices);
        labels = vstack(labels, one_hot(lbl, m.num_classes).data());
        set.original = sample.indices.size();
        set.shortfall += sample.shortfall;
    }
    if (n_mixed > 0) {
        if (opts.embedder && m.inputs) {
            const VertexSample base = sample_vertices(m.labels, m.num_classes, target, rng);
            set.shortfall += base.shortfall;
            const MixupPlan plan = make_plan(n_mixed, base.indices.size(), *preset.alpha, rng());
            const Matrix mixed_inputs = mix_rows(select_rows(*m.inputs, base.indices), plan);
            const auto taps = (*opts.embedder)(mixed_inputs);
            for (int d : depths) {
                const auto it = taps.find(d);
                if (it == taps.end()) {
                    throw DataError("embedder produced no layer with depth_from_end " + std::to_string(d));
                }
                detail::append(set, d, it->second);
            }
            const auto base_labels = one_hot(detail::select_labels(m.labels, base.indices), m.num_classes);
            labels = vstack(labels, mix_labels(base_labels, plan).data());
        } else if (m.mixup) {
            const auto& mx = *m.mixup;
            const std::size_t p = mx.plan.size();
            const std::size_t take = std::min(n_mixed, p);
            std::vector<std::size_t> pool(p);
            std::iota(pool.begin(), pool.end(), std::size_t{0});
            for (std::size_t t = 0; t < take; ++t) {
                std::swap(pool[t], pool[t + static_cast<std::size_t>(rng.below(p - t))]);
            }
            pool.resize(take);
            set.shortfall += n_mixed - take;
            for (int d : depths) {
                const LayerTap* tap = mx.layer_at_depth(d);
                if (!tap) throw DataError("mixup section lacks depth_from_end " + std::to_string(d));
                detail::append(set, d, select_rows(tap->embeddings.data(), pool));
            }
            labels = vstack(labels, select_rows(mx.soft_labels.data(), pool));
        } else {
            throw DataError("mixed vertices requested but neither an embedder nor a mixup section is available");
        }
        set.mixed = static_cast<std::size_t>(labels.rows()) - set.original;
    }
    set.labels = LabelMatrix(std::move(labels));
    return set;
}

/// Normalized label variation of one layer on vertices drawn from the stream `seed`.
inline Sigma sigma_for_layer(const DatasetManifest& m, int depth, const ScorePreset& preset, std::uint64_t seed,
                             const ScoreOptions& opts = {}) {
    preset.validate();
    check_manifest_for(m, preset, opts);
    SplitMix64 rng(seed);
    const VertexSet set = draw_vertices(m, preset, rng, opts);
    const auto it = set.layers.find(depth);
    if (it == set.layers.end()) {
        throw DataError("depth_from_end " + std::to_string(depth) + " is not consumed by method " +
                        to_string(preset.method));
    }
    return sigma_for_vertices(it->second, set.labels, preset.graph);
}

// ---------------------------------------------------------------------------
// Reports

struct GraphResult {
    std::map<int, Sigma> sigma;  ///< keyed by depth_from_end
    double score = 0.0;
    std::size_t vertices = 0;
    std::size_t mixed = 0;
    std::size_t shortfall = 0;
};

struct ScoreReport {
    std::string method;
    std::uint64_t seed = 0;
    ScorePreset preset;
    std::map<int, std::string> layer_names;
    std::vector<GraphResult> graphs;
    double final_score = 0.0;
};

inline double method_score(Method m, const std::map<int, Sigma>& s) {
    switch (m) {
        case Method::vr: return score_vr(s.at(1).normalized, s.at(2).normalized, s.at(3).normalized);
        case Method::wcv: return score_wcv(s.at(1).normalized, s.at(2).normalized, s.at(3).normalized);
        case Method::vpm: return score_vpm(s.at(2).normalized);
    }
    return 0.0;
}

inline ScoreReport run_score(const DatasetManifest& m, const ScorePreset& preset, std::uint64_t seed,
                             const ScoreOptions& opts = {}) {
    preset.validate();
    check_manifest_for(m, preset, opts);
    const auto depths = required_depths(preset.method);

    ScoreReport report;
    report.method = to_string(preset.method);
    report.seed = seed;
    report.preset = preset;
    for (int d : depths) {
        const LayerTap* tap = m.layer_at_depth(d);
        if (preset.vertex_policy == VertexPolicy::mixed_only && !(opts.embedder && m.inputs) && m.mixup) {
            tap = m.mixup->layer_at_depth(d);
        }
        report.layer_names[d] = tap ? tap->name : "depth " + std::to_string(d);
    }
    report.graphs.resize(static_cast<std::size_t>(preset.n_graphs));

    parallel_for(report.graphs.size(), opts.threads, [&](std::size_t g) {
        try {
            SplitMix64 rng(stream_seed(seed, g));
            const VertexSet set = draw_vertices(m, preset, rng, opts);
            GraphResult& r = report.graphs[g];
            for (int d : depths) r.sigma[d] = sigma_for_vertices(set.layers.at(d), set.labels, preset.graph);
            r.score = method_score(preset.method, r.sigma);
            r.vertices = static_cast<std::size_t>(set.labels.rows());
            r.mixed = set.mixed;
            r.shortfall = set.shortfall;
        } catch (const ConfigError& ex) {
            throw ConfigError("graph " + std::to_string(g) + ": " + ex.what());
        } catch (const FormatError& ex) {
            throw FormatError("graph " + std::to_string(g) + ": " + ex.what());
        } catch (const DataError& ex) {
            throw DataError("graph " + std::to_string(g) + ": " + ex.what());
        }
    });

    std::vector<double> scores;
    for (const auto& r : report.graphs) scores.push_back(r.score);
    report.final_score = median(std::move(scores));
    return report;
}

inline nlohmann::json report_to_json(const ScoreReport& r) {
    nlohmann::json graphs = nlohmann::json::array();
    for (const auto& g : r.graphs) {
        nlohmann::json sigma = nlohmann::json::object();
        nlohmann::json raw = nlohmann::json::object();
        nlohmann::json weight = nlohmann::json::object();
        for (const auto& [d, s] : g.sigma) {
            sigma[std::to_string(d)] = s.normalized;
            raw[std::to_string(d)] = s.raw;
            weight[std::to_string(d)] = s.weight;
        }
        graphs.push_back({{"sigma", sigma},
                          {"raw_sigma", raw},
                          {"edge_weight", weight},
                          {"score", g.score},
                          {"vertices", g.vertices},
                          {"mixed_vertices", g.mixed},
                          {"shortfall", g.shortfall}});
    }
    nlohmann::json layers = nlohmann::json::object();
    for (const auto& [d, name] : r.layer_names) layers[std::to_string(d)] = name;
    return {{"method", r.method}, {"seed", r.seed},     {"preset", preset_to_json(r.preset)},
            {"layers", layers},   {"graphs", graphs},   {"final", r.final_score}};
}

inline void write_report(const std::string& path, const ScoreReport& r) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << report_to_json(r).dump(2) << '\n';
}

}  // namespace lgg
