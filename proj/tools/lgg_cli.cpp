// lgg: command-line front end for latent geometry graph scoring.
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lgg/lgg.hpp"

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct GraphBuildArgs {
    std::string embeddings;
    std::string kernel = "cosine";
    int k = 0;
    bool binarize = false;
    bool symmetrize = false;
    bool normalize = false;
    std::optional<double> gamma;
    std::string out;
};

struct ScoreArgs {
    std::string manifest;
    std::string method;
    std::optional<int> graphs;
    std::uint64_t seed = 0;
    std::optional<double> alpha;
    std::optional<std::string> vertex_policy;
    std::string model;
    std::string out;
};

struct ExperimentArgs {
    std::string zoo;
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct PlanArgs {
    std::size_t n = 0;
    std::size_t sources = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::string out;
};

int run_graph_build(const GraphBuildArgs& a) {
    lgg::GraphConfig cfg;
    cfg.kernel = lgg::kernel_from_string(a.kernel);
    cfg.k = a.k;
    cfg.binarize = a.binarize;
    cfg.symmetrize = a.symmetrize;
    cfg.normalize = a.normalize;
    cfg.gamma = a.gamma;
    cfg.validate();
    const auto x = lgg::read_array_file(a.embeddings);
    const auto g = lgg::build_lgg(x, cfg);
    lgg::write_graph(a.out, g);
    std::cerr << "wrote graph with " << g.n() << " vertices and " << g.edges().size() << " edges to " << a.out
              << '\n';
    return 0;
}

int run_score_cmd(const ScoreArgs& a, unsigned threads) {
    lgg::ScorePreset preset = lgg::ScorePreset::for_method(lgg::method_from_string(a.method));
    if (a.graphs) {
        preset.n_graphs = *a.graphs;
        if (preset.method == lgg::Method::vpm && *a.graphs == 1) preset = lgg::ScorePreset::vpm_final();
    }
    if (a.vertex_policy) preset.set_vertex_policy(lgg::vertex_policy_from_string(*a.vertex_policy));
    if (a.alpha) {
        preset.alpha = *a.alpha;
        if (!preset.use_mixup) std::cerr << "note: --alpha has no effect without mixup\n";
    }
    preset.validate();

    const auto manifest = lgg::load_manifest(a.manifest);
    std::optional<lgg::RefNet> net;
    std::optional<lgg::Embedder> embedder;
    lgg::ScoreOptions opts;
    opts.threads = threads;
    if (!a.model.empty()) {
        net = lgg::read_model(a.model);
        embedder = lgg::make_embedder(*net);
        opts.embedder = &*embedder;
        if (!manifest.inputs) throw lgg::DataError("--model needs a manifest with an \"inputs\" file");
    }
    const auto report = lgg::run_score(manifest, preset, a.seed, opts);
    lgg::write_report(a.out, report);
    std::printf("%.12f\n", report.final_score);
    return 0;
}

int run_experiment(const ExperimentArgs& a, unsigned threads) {
    if (!std::filesystem::exists(a.zoo)) throw lgg::DataError("zoo file not found: " + a.zoo);
    const auto zoo = lgg::read_zoo(a.zoo);
    const std::vector<lgg::ScorePreset> presets{lgg::ScorePreset::vr(), lgg::ScorePreset::wcv(),
                                                lgg::ScorePreset::vpm()};
    const auto result = lgg::run_zoo(zoo, presets, a.seed, threads);
    lgg::write_zoo_result(a.out_dir, result);
    for (const auto& [method, tau] : result.tau) {
        if (method != "vpm") std::cerr << "tau_" << method << '=' << tau << '\n';
    }
    std::printf("tau_vpm=%.6f\n", result.tau.at("vpm"));
    return 0;
}

int run_plan(const PlanArgs& a) {
    const auto plan = lgg::make_plan(a.n, a.sources, a.alpha, a.seed);
    lgg::write_plan(a.out, plan);
    std::cerr << "wrote " << plan.size() << " mixup entries to " << a.out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent geometry graph scores for predicting generalization"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    auto* graph = app.add_subcommand("graph", "Graph utilities");
    graph->require_subcommand(1);
    GraphBuildArgs gb;
    auto* build = graph->add_subcommand("build", "Build a latent geometry graph and dump it as JSON");
    build->add_option("--embeddings", gb.embeddings, "N x D embeddings (.npy or CSV)")->required()->check(CLI::ExistingFile);
    build->add_option("--kernel", gb.kernel, "Similarity kernel")->check(CLI::IsMember({"cosine", "rbf"}));
    build->add_option("--k", gb.k, "Neighbors per vertex")->required()->check(CLI::PositiveNumber);
    build->add_flag("--binarize", gb.binarize, "Set kept weights to 1");
    build->add_flag("--symmetrize", gb.symmetrize, "Connect i and j when either is a neighbor of the other");
    build->add_flag("--normalize", gb.normalize, "Degree-normalize the adjacency");
    build->add_option("--gamma", gb.gamma, "RBF bandwidth (default: median heuristic)")->check(CLI::PositiveNumber);
    build->add_option("--out", gb.out, "Output graph JSON")->required();

    ScoreArgs sa;
    auto* score = app.add_subcommand("score", "Score a manifest; prints the final score");
    score->add_option("--manifest", sa.manifest, "Dataset manifest JSON")->required();
    score->add_option("--method", sa.method, "Score method")->required()->check(CLI::IsMember({"vr", "wcv", "vpm"}));
    score->add_option("--graphs", sa.graphs, "Number of graphs |G|")->check(CLI::PositiveNumber);
    score->add_option("--seed", sa.seed, "Random seed")->required();
    score->add_option("--alpha", sa.alpha, "Mixup Beta(alpha, alpha) concentration")->check(CLI::PositiveNumber);
    score->add_option("--vertex-policy", sa.vertex_policy, "Graph vertices")
        ->check(CLI::IsMember({"mixed", "original", "both"}));
    score->add_option("--model", sa.model, "Reference model JSON used to embed mixed inputs")->check(CLI::ExistingFile);
    score->add_option("--out", sa.out, "Output report JSON")->required();

    ExperimentArgs ea;
    auto* experiment = app.add_subcommand("experiment", "Train a model zoo and correlate scores with the gap");
    experiment->add_option("--zoo", ea.zoo, "Zoo specification JSON")->required();
    experiment->add_option("--seed", ea.seed, "Random seed")->required();
    experiment->add_option("--out-dir", ea.out_dir, "Directory for results.csv / results.json")->required();

    auto* mixup = app.add_subcommand("mixup", "Mixup utilities");
    mixup->require_subcommand(1);
    PlanArgs pa;
    auto* plan = mixup->add_subcommand("plan", "Write a reproducible mixup plan");
    plan->add_option("--n", pa.n, "Number of mixed pairs")->required();
    plan->add_option("--sources", pa.sources, "Number of source samples")->required()->check(CLI::Range(2ul, SIZE_MAX));
    plan->add_option("--alpha", pa.alpha, "Beta(alpha, alpha) concentration")->required()->check(CLI::PositiveNumber);
    plan->add_option("--seed", pa.seed, "Random seed")->required();
    plan->add_option("--out", pa.out, "Output plan JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (build->parsed()) return run_graph_build(gb);
        if (score->parsed()) return run_score_cmd(sa, threads);
        if (experiment->parsed()) return run_experiment(ea, threads);
        if (plan->parsed()) return run_plan(pa);
    } catch (const lgg::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
