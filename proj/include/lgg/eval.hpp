// Model-zoo evaluation: train small nets across an over/under-fitting grid,
// score each with the label-variation presets and rank-correlate scores with
// the measured generalization gap.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgg/error.hpp"
#include "lgg/parallel.hpp"
#include "lgg/refnet.hpp"
#include "lgg/scoring.hpp"

namespace lgg {

/// Kendall tau-b with tie correction, O(n^2).
inline double kendall_tau(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("kendall_tau: length mismatch");
    if (a.size() < 2) throw DataError("kendall_tau needs at least 2 observations");
    long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da == 0.0 && db == 0.0) continue;
            if (da == 0.0) {
                ++ties_a;
            } else if (db == 0.0) {
                ++ties_b;
            } else if ((da > 0) == (db > 0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double n1 = static_cast<double>(concordant + discordant + ties_a);
    const double n2 = static_cast<double>(concordant + discordant + ties_b);
    if (n1 == 0.0 || n2 == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2);
}

/// Independent 64-bit seed for sub-task `tag` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    SplitMix64 rng(seed ^ (tag * 0xd1b54a32d192ed03ULL));
    return rng();
}

struct ZooModel {
    int width = 16;
    int depth = 3;  ///< hidden layers
    int epochs = 5;
    double noise = 0.0;  ///< label-shuffle fraction
};

struct ZooSpec {
    BlobSpec data;
    int batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::vector<ZooModel> models;

    /// Twelve models: noise {0, 0.5, 1} x epochs {5, 50} x (width, depth) in {(16, 3), (64, 4)}.
    /// Inputs outnumber training samples, so every net can fit shuffled labels.
    static ZooSpec default_zoo() {
        ZooSpec z;
        z.data = {4, 256, 50, 125, 4.0};
        z.batch_size = 8;
        z.learning_rate = 0.02;
        for (const auto& [width, depth] : {std::pair{16, 3}, std::pair{64, 4}})
            for (int epochs : {5, 50})
                for (double noise : {0.0, 0.5, 1.0}) z.models.push_back({width, depth, epochs, noise});
        return z;
    }
};

inline nlohmann::json zoo_to_json(const ZooSpec& z) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : z.models) {
        models.push_back({{"width", m.width}, {"depth", m.depth}, {"epochs", m.epochs}, {"noise", m.noise}});
    }
    return {{"data",
             {{"classes", z.data.classes},
              {"dim", z.data.dim},
              {"train_per_class", z.data.train_per_class},
              {"test_per_class", z.data.test_per_class},
              {"separation", z.data.separation}}},
            {"train", {{"batch_size", z.batch_size}, {"learning_rate", z.learning_rate}, {"momentum", z.momentum}}},
            {"models", models}};
}

inline ZooSpec zoo_from_json(const nlohmann::json& j) {
    try {
        ZooSpec z;
        const ZooSpec defaults = ZooSpec::default_zoo();
        z.data = defaults.data;
        if (j.contains("data")) {
            const auto& d = j["data"];
            z.data.classes = d.value("classes", z.data.classes);
            z.data.dim = d.value("dim", z.data.dim);
            z.data.train_per_class = d.value("train_per_class", z.data.train_per_class);
            z.data.test_per_class = d.value("test_per_class", z.data.test_per_class);
            z.data.separation = d.value("separation", z.data.separation);
        }
        if (j.contains("train")) {
            const auto& t = j["train"];
            z.batch_size = t.value("batch_size", z.batch_size);
            z.learning_rate = t.value("learning_rate", z.learning_rate);
            z.momentum = t.value("momentum", z.momentum);
        }
        for (const auto& m : j.at("models")) {
            z.models.push_back({m.at("width").get<int>(), m.at("depth").get<int>(), m.at("epochs").get<int>(),
                                m.at("noise").get<double>()});
        }
        if (z.models.empty()) throw ConfigError("zoo declares no models");
        return z;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("malformed zoo file: ") + ex.what());
    }
}

inline ZooSpec read_zoo(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open zoo file '" + path + "'");
    try {
        return zoo_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& ex) {
        throw FormatError(path + ": " + ex.what());
    }
}

struct ZooRow {
    std::size_t model_id = 0;
    ZooModel model;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double gap = 0.0;
    /// Final score per method name; NaN when the method failed on this model.
    std::map<std::string, double> scores;
    std::map<std::string, std::string> errors;
};

struct ZooResult {
    std::uint64_t seed = 0;
    std::vector<ScorePreset> presets;
    std::vector<ZooRow> rows;
    /// tau(score, gap) per method over the rows where both are finite.
    std::map<std::string, double> tau;
};

inline TrainSpec zoo_train_spec(const ZooSpec& z, const ZooModel& m, std::uint64_t seed) {
    TrainSpec t;
    t.epochs = m.epochs;
    t.batch_size = z.batch_size;
    t.learning_rate = z.learning_rate;
    t.momentum = z.momentum;
    t.seed = seed;
    t.label_shuffle = m.noise;
    return t;
}

inline std::vector<int> zoo_dims(const ZooSpec& z, const ZooModel& m) {
    std::vector<int> dims{z.data.dim};
    for (int l = 0; l < m.depth; ++l) dims.push_back(m.width);
    dims.push_back(z.data.classes);
    return dims;
}

/// Train every zoo model on one blob task and score it with each preset.
/// Deterministic in (zoo, presets, seed); models are processed in parallel.
inline ZooResult run_zoo(const ZooSpec& zoo, const std::vector<ScorePreset>& presets, std::uint64_t seed,
                         unsigned threads = 0) {
    for (const auto& p : presets) p.validate();
    const BlobTask task = make_blobs(zoo.data, derive_seed(seed, 0));
    ZooResult result;
    result.seed = seed;
    result.presets = presets;
    result.rows.resize(zoo.models.size());

    parallel_for(zoo.models.size(), threads, [&](std::size_t idx) {
        const ZooModel& spec = zoo.models[idx];
        const std::uint64_t model_seed = derive_seed(seed, idx + 1);
        ZooRow& row = result.rows[idx];
        row.model_id = idx;
        row.model = spec;
        const RefNet init = RefNet::init(zoo_dims(zoo, spec), model_seed);
        TrainResult trained;
        try {
            trained = train(init, task.x_train, task.y_train, zoo_train_spec(zoo, spec, model_seed));
        } catch (const DataError& ex) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            row.train_acc = row.test_acc = row.gap = nan;
            for (const auto& p : presets) row.scores[to_string(p.method)] = nan;
            row.errors["train"] = ex.what();
            return;
        }
        row.train_acc = accuracy(trained.net, task.x_train, trained.labels);
        row.test_acc = accuracy(trained.net, task.x_test, task.y_test);
        row.gap = row.train_acc - row.test_acc;

        const DatasetManifest manifest = make_manifest(trained.net, task.x_train, trained.labels);
        const Embedder embedder = make_embedder(trained.net);
        ScoreOptions opts;
        opts.threads = 1;
        opts.embedder = &embedder;
        for (const auto& p : presets) {
            const std::string key = to_string(p.method);
            try {
                row.scores[key] = run_score(manifest, p, derive_seed(seed, 1000 + idx), opts).final_score;
            } catch (const DataError& ex) {
                row.scores[key] = std::numeric_limits<double>::quiet_NaN();
                row.errors[key] = ex.what();
            }
        }
    });

    for (const auto& p : presets) {
        const std::string key = to_string(p.method);
        std::vector<double> s, g;
        for (const auto& r : result.rows) {
            if (std::isfinite(r.scores.at(key)) && std::isfinite(r.gap)) {
                s.push_back(r.scores.at(key));
                g.push_back(r.gap);
            }
        }
        result.tau[key] = s.size() >= 2 ? kendall_tau(s, g) : std::numeric_limits<double>::quiet_NaN();
    }
    return result;
}

inline std::string zoo_csv(const ZooResult& r) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "model_id,width,depth,epochs,noise,train_acc,test_acc,gap,vr,wcv,vpm\n";
    auto value = [&](double v) {
        if (std::isfinite(v)) out << v;
    };
    auto cell = [&](const ZooRow& row, const char* key) {
        const auto it = row.scores.find(key);
        if (it != row.scores.end()) value(it->second);
    };
    for (const auto& row : r.rows) {
        out << row.model_id << ',' << row.model.width << ',' << row.model.depth << ',' << row.model.epochs << ','
            << row.model.noise << ',';
        value(row.train_acc);
        out << ',';
        value(row.test_acc);
        out << ',';
        value(row.gap);
        out << ',';
        cell(row, "vr");
        out << ',';
        cell(row, "wcv");
        out << ',';
        cell(row, "vpm");
        out << '\n';
    }
    return out.str();
}

inline nlohmann::json zoo_result_to_json(const ZooResult& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json presets = nlohmann::json::array();
    for (const auto& p : r.presets) presets.push_back(preset_to_json(p));
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json j = {{"model_id", row.model_id}, {"width", row.model.width},  {"depth", row.model.depth},
                            {"epochs", row.model.epochs}, {"noise", row.model.noise}, {"train_acc", num(row.train_acc)},
                            {"test_acc", num(row.test_acc)}, {"gap", num(row.gap)},           {"presets", presets}};
        for (const char* key : {"vr", "wcv", "vpm"}) {
            const auto it = row.scores.find(key);
            j[key] = it == row.scores.end() ? nlohmann::json(nullptr) : num(it->second);
        }
        if (!row.errors.empty()) j["errors"] = row.errors;
        rows.push_back(std::move(j));
    }
    nlohmann::json tau = nlohmann::json::object();
    for (const auto& [k, v] : r.tau) tau[k] = num(v);
    return {{"seed", r.seed}, {"rows", rows}, {"tau", tau}};
}

/// Write results.csv and results.json under `dir` (created if absent).
inline void write_zoo_result(const std::filesystem::path& dir, const ZooResult& r) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "results.csv");
    std::ofstream json(dir / "results.json");
    if (!csv || !json) throw DataError("cannot write results under '" + dir.string() + "'");
    csv << zoo_csv(r);
    json << zoo_result_to_json(r).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Generalizer vs memorizer

struct ContrastSpec {
    BlobSpec data{4, 20, 60, 60, 3.0};
    int width = 128;
    int depth = 3;
    /// Fixed length, well past the point where both nets fit their labels.
    int epochs = 400;
    int batch_size = 16;
    double learning_rate = 0.05;
    double momentum = 0.9;
    ScorePreset preset = ScorePreset::vpm();
};

struct ContrastResult {
    double sigma_generalizer = 0.0;  ///< VPM with mixup
    double sigma_memorizer = 0.0;
    double sigma_generalizer_original = 0.0;  ///< same preset on original vertices
    double sigma_memorizer_original = 0.0;
    double train_acc_generalizer = 0.0;
    double train_acc_memorizer = 0.0;
};

/// Train one net on clean labels and one on fully shuffled labels and score
/// both with and without mixup.
inline ContrastResult contrast_test(std::uint64_t seed, const ContrastSpec& spec = {}, unsigned threads = 0) {
    const BlobTask task = make_blobs(spec.data, derive_seed(seed, 0));
    std::vector<int> dims{spec.data.dim};
    for (int l = 0; l < spec.depth; ++l) dims.push_back(spec.width);
    dims.push_back(spec.data.classes);

    ContrastResult out;
    for (int which = 0; which < 2; ++which) {
        const bool memorizer = which == 1;
        const std::uint64_t model_seed = derive_seed(seed, 1 + static_cast<std::uint64_t>(which));
        TrainSpec ts;
        ts.epochs = spec.epochs;
        ts.batch_size = spec.batch_size;
        ts.learning_rate = spec.learning_rate;
        ts.momentum = spec.momentum;
        ts.seed = model_seed;
        ts.label_shuffle = memorizer ? 1.0 : 0.0;
        const TrainResult tr = train(RefNet::init(dims, model_seed), task.x_train, task.y_train, ts);

        const DatasetManifest manifest = make_manifest(tr.net, task.x_train, tr.labels);
        const Embedder embedder = make_embedder(tr.net);
        ScoreOptions opts;
        opts.threads = threads;
        opts.embedder = &embedder;
        const std::uint64_t score_seed = derive_seed(seed, 100);
        const double mixed = run_score(manifest, spec.preset, score_seed, opts).final_score;
        ScorePreset plain = spec.preset;
        plain.set_vertex_policy(VertexPolicy::original);
        const double original = run_score(manifest, plain, score_seed, opts).final_score;
        const double acc = accuracy(tr.net, task.x_train, tr.labels);
        if (memorizer) {
            out.sigma_memorizer = mixed;
            out.sigma_memorizer_original = original;
            out.train_acc_memorizer = acc;
        } else {
            out.sigma_generalizer = mixed;
            out.sigma_generalizer_original = original;
            out.train_acc_generalizer = acc;
        }
    }
    return out;
}

}  // namespace lgg
