#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgg/error.hpp"
#include "lgg/matrix.hpp"
#include "lgg/mixup.hpp"
#include "lgg/tensor_io.hpp"

namespace lgg {

/// One tapped representation. depth_from_end 1 is the last tapped layer.
struct LayerTap {
    std::string name;
    std::string file;
    int depth_from_end = 0;
    EmbeddingMatrix embeddings;
};

/// Precomputed embeddings of mixed inputs, row t matching plan entry t.
struct MixupSection {
    std::string plan_file;
    MixupPlan plan;
    std::vector<LayerTap> layers;
    std::string soft_labels_file;
    LabelMatrix soft_labels;

    const LayerTap* layer_at_depth(int depth) const {
        for (const auto& l : layers)
            if (l.depth_from_end == depth) return &l;
        return nullptr;
    }
};

/// A validated, eagerly loaded dataset: per-layer embeddings, hard labels and
/// optional raw inputs / mixup section. Can also be assembled in memory.
struct DatasetManifest {
    std::vector<LayerTap> layers;
    std::string labels_file;
    std::vector<int> labels;
    int num_classes = 0;
    std::string inputs_file;
    std::optional<Matrix> inputs;
    std::optional<MixupSection> mixup;

    std::size_t size() const { return labels.size(); }

    const LayerTap* layer_at_depth(int depth) const {
        for (const auto& l : layers)
            if (l.depth_from_end == depth) return &l;
        return nullptr;
    }

    /// Throws DataError/ConfigError naming the offending layer when any contract is broken.
    void validate() const {
        if (num_classes < 1) throw ConfigError("num_classes must be positive");
        if (labels.empty()) throw DataError("manifest has no labels");
        if (layers.empty()) throw DataError("manifest declares no layers");
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] < 0 || labels[i] >= num_classes) {
                throw DataError("label at index " + std::to_string(i) + " has value " + std::to_string(labels[i]) +
                                ", outside [0, " + std::to_string(num_classes) + ")");
            }
        }
        const auto n = static_cast<Index>(labels.size());
        check_layers(layers, n, "layer");
        if (inputs && inputs->rows() != n) {
            throw DataError("inputs have " + std::to_string(inputs->rows()) + " rows but labels have " +
                            std::to_string(n));
        }
        if (mixup) {
            const auto p = static_cast<Index>(mixup->plan.size());
            check_layers(mixup->layers, p, "mixup layer");
            if (mixup->soft_labels.rows() != p) {
                throw DataError("mixup soft labels have " + std::to_string(mixup->soft_labels.rows()) +
                                " rows but the plan has " + std::to_string(p) + " entries");
            }
            if (mixup->soft_labels.cols() != num_classes) {
                throw DataError("mixup soft labels have " + std::to_string(mixup->soft_labels.cols()) +
                                " columns, expected " + std::to_string(num_classes));
            }
            for (const auto& e : mixup->plan.entries) {
                if (e.i >= labels.size() || e.j >= labels.size()) {
                    throw DataError("mixup plan references sample " + std::to_string(std::max(e.i, e.j)) +
                                    " beyond N = " + std::to_string(labels.size()));
                }
            }
        }
    }

private:
    static void check_layers(const std::vector<LayerTap>& taps, Index n, const std::string& what) {
        std::set<int> depths;
        for (const auto& l : taps) {
            if (l.depth_from_end < 1) {
                throw DataError(what + " \"" + l.name + "\" has depth_from_end " + std::to_string(l.depth_from_end) +
                                ", expected a positive integer");
            }
            if (!depths.insert(l.depth_from_end).second) {
                throw DataError(what + " \"" + l.name + "\" duplicates depth_from_end " +
                                std::to_string(l.depth_from_end));
            }
            if (l.embeddings.rows() != n) {
                throw DataError(what + " \"" + l.name + "\" has " + std::to_string(l.embeddings.rows()) +
                                " rows, expected " + std::to_string(n));
            }
        }
    }
};

namespace detail {

inline std::string resolve(const std::filesystem::path& base, const std::string& file) {
    const std::filesystem::path p(file);
    return p.is_absolute() ? p.string() : (base / p).string();
}

inline std::vector<LayerTap> load_taps(const nlohmann::json& arr, const std::filesystem::path& base) {
    std::vector<LayerTap> taps;
    for (const auto& l : arr) {
        LayerTap tap;
        tap.name = l.at("name").get<std::string>();
        tap.file = l.at("file").get<std::string>();
        tap.depth_from_end = l.at("depth_from_end").get<int>();
        try {
            tap.embeddings = read_array_file(resolve(base, tap.file));
        } catch (const Error& ex) {
            throw DataError("layer \"" + tap.name + "\": " + ex.what());
        }
        taps.push_back(std::move(tap));
    }
    return taps;
}

}  // namespace detail

/// Parse, load and validate a manifest JSON document. Relative paths resolve
/// against `base_dir`.
inline DatasetManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    DatasetManifest m;
    try {
        m.num_classes = j.at("num_classes").get<int>();
        if (m.num_classes < 1) throw ConfigError("num_classes must be positive");
        m.layers = detail::load_taps(j.at("layers"), base_dir);
        m.labels_file = j.at("labels").get<std::string>();
        auto labels = read_labels(detail::resolve(base_dir, m.labels_file), m.num_classes);
        if (!std::holds_alternative<std::vector<int>>(labels)) {
            throw DataError("manifest labels must be integer class labels");
        }
        m.labels = std::get<std::vector<int>>(std::move(labels));
        if (j.contains("inputs") && !j["inputs"].is_null()) {
            m.inputs_file = j["inputs"].get<std::string>();
            m.inputs = read_array(detail::resolve(base_dir, m.inputs_file));
        }
        if (j.contains("mixup") && !j["mixup"].is_null()) {
            const auto& mx = j["mixup"];
            MixupSection s;
            s.plan_file = mx.at("plan").get<std::string>();
            s.plan = read_plan(detail::resolve(base_dir, s.plan_file));
            s.layers = detail::load_taps(mx.at("layers"), base_dir);
            s.soft_labels_file = mx.at("soft_labels").get<std::string>();
            auto soft = read_labels(detail::resolve(base_dir, s.soft_labels_file), m.num_classes);
            if (!std::holds_alternative<LabelMatrix>(soft)) {
                throw DataError("mixup soft_labels must be an N x C matrix");
            }
            s.soft_labels = std::get<LabelMatrix>(std::move(soft));
            m.mixup = std::move(s);
        }
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("malformed manifest: ") + ex.what());
    }
    m.validate();
    return m;
}

inline DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& ex) {
        throw FormatError(path + ": " + ex.what());
    }
    return manifest_from_json(j, std::filesystem::path(path).parent_path());
}

}  // namespace lgg
