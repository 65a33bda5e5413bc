#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgg/error.hpp"
#include "lgg/matrix.hpp"
#include "lgg/rng.hpp"

namespace lgg {

struct MixupEntry {
    std::size_t i = 0;
    std::size_t j = 0;
    double lambda = 0.0;

    bool operator==(const MixupEntry&) const = default;
};

/// Ordered list of (i, j, lambda) interpolations; row t of a mixed matrix is
/// lambda_t * M[i_t] + (1 - lambda_t) * M[j_t].
struct MixupPlan {
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::vector<MixupEntry> entries;

    std::size_t size() const { return entries.size(); }
    bool operator==(const MixupPlan&) const = default;
};

/// Draw `n_pairs` ordered pairs (i != j) uniformly from `n_source` rows with
/// lambda ~ Beta(alpha, alpha). Fully determined by `seed`.
inline MixupPlan make_plan(std::size_t n_pairs, std::size_t n_source, double alpha, std::uint64_t seed) {
    if (n_source < 2) {
        throw ConfigError("mixup needs at least 2 source rows, got " + std::to_string(n_source));
    }
    if (!(alpha > 0.0)) throw ConfigError("mixup alpha must be positive, got " + std::to_string(alpha));
    MixupPlan plan{alpha, seed, {}};
    plan.entries.reserve(n_pairs);
    SplitMix64 rng(seed);
    for (std::size_t t = 0; t < n_pairs; ++t) {
        const auto i = static_cast<std::size_t>(rng.below(n_source));
        auto j = static_cast<std::size_t>(rng.below(n_source - 1));
        if (j >= i) ++j;
        plan.entries.push_back({i, j, sample_beta(alpha, rng)});
    }
    return plan;
}

inline Matrix mix_rows(const Matrix& m, const MixupPlan& plan) {
    Matrix out(static_cast<Index>(plan.size()), m.cols());
    const auto n = static_cast<std::size_t>(m.rows());
    for (std::size_t t = 0; t < plan.size(); ++t) {
        const auto& e = plan.entries[t];
        if (e.i >= n || e.j >= n) {
            throw DataError("mixup entry " + std::to_string(t) + " references row " +
                            std::to_string(std::max(e.i, e.j)) + " but only " + std::to_string(n) +
                            " rows exist");
        }
        out.row(static_cast<Index>(t)) = e.lambda * m.row(static_cast<Index>(e.i)) +
                                         (1.0 - e.lambda) * m.row(static_cast<Index>(e.j));
    }
    return out;
}

inline LabelMatrix mix_labels(const LabelMatrix& y, const MixupPlan& plan) {
    Matrix mixed = mix_rows(y.data(), plan);
    // Convex combinations can drift by an ulp outside [0, 1].
    mixed = mixed.cwiseMax(0.0).cwiseMin(1.0);
    return LabelMatrix(std::move(mixed));
}

inline nlohmann::json plan_to_json(const MixupPlan& plan) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : plan.entries) entries.push_back({e.i, e.j, e.lambda});
    return {{"alpha", plan.alpha}, {"seed", plan.seed}, {"entries", std::move(entries)}};
}

inline MixupPlan plan_from_json(const nlohmann::json& j) {
    try {
        MixupPlan plan;
        plan.alpha = j.at("alpha").get<double>();
        plan.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& e : j.at("entries")) {
            if (!e.is_array() || e.size() != 3) throw FormatError("plan entry must be [i, j, lambda]");
            MixupEntry entry{e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()};
            if (!(entry.lambda >= 0.0 && entry.lambda <= 1.0)) {
                throw DataError("plan lambda " + std::to_string(entry.lambda) + " outside [0,1]");
            }
            plan.entries.push_back(entry);
        }
        return plan;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("malformed mixup plan: ") + ex.what());
    }
}

inline void write_plan(const std::string& path, const MixupPlan& plan) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << plan_to_json(plan).dump() << '\n';
}

inline MixupPlan read_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mixup plan '" + path + "'");
    try {
        return plan_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& ex) {
        throw FormatError(path + ": " + ex.what());
    }
}

}  // namespace lgg
