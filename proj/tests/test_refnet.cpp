#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace lgg {
namespace {

RefNet jittered(std::vector<int> dims, std::uint64_t seed) {
    RefNet net = RefNet::init(std::move(dims), seed);
    SplitMix64 rng(seed + 1);
    for (auto& l : net.layers())
        for (Index i = 0; i < l.b.size(); ++i) l.b(i) = rng.uniform(-0.1, 0.1);
    return net;
}

TEST(RefNet, InitIsDeterministicWithZeroBiases) {
    const auto a = RefNet::init({5, 7, 3}, 42);
    const auto b = RefNet::init({5, 7, 3}, 42);
    const auto c = RefNet::init({5, 7, 3}, 43);
    EXPECT_EQ(model_to_json(a), model_to_json(b));
    EXPECT_NE(model_to_json(a), model_to_json(c));
    for (const auto& l : a.layers()) EXPECT_EQ(l.b.cwiseAbs().maxCoeff(), 0.0);
    const double limit = std::sqrt(6.0 / 12.0);
    EXPECT_LE(a.layers()[0].w.cwiseAbs().maxCoeff(), limit);
}

TEST(RefNet, ZeroInputGivesUniformSoftmax) {
    const auto net = RefNet::init({4, 6, 6, 5}, 1);
    const auto r = net.forward_with_taps(Matrix::Zero(3, 4));
    EXPECT_LE((r.probs.array() - 0.2).abs().maxCoeff(), 1e-15);
}

TEST(RefNet, ProbabilitiesAndTaps) {
    std::mt19937_64 gen(2);
    const auto net = jittered({6, 10, 9, 8, 4}, 2);
    const Matrix x = testing::random_matrix(gen, 20, 6);
    const auto r = net.forward_with_taps(x);
    for (Index i = 0; i < r.probs.rows(); ++i) EXPECT_NEAR(r.probs.row(i).sum(), 1.0, 1e-12);
    ASSERT_EQ(r.taps.size(), 3u);
    EXPECT_EQ(r.taps.at(1).cols(), 8);
    EXPECT_EQ(r.taps.at(2).cols(), 9);
    EXPECT_EQ(r.taps.at(3).cols(), 10);
    for (const auto& [d, t] : r.taps) EXPECT_GE(t.minCoeff(), 0.0);
}

TEST(RefNet, BatchMatchesSingleRows) {
    std::mt19937_64 gen(3);
    const auto net = jittered({5, 8, 8, 3}, 3);
    const Matrix x = testing::random_matrix(gen, 7, 5);
    const auto batch = net.forward_with_taps(x);
    for (Index i = 0; i < x.rows(); ++i) {
        const auto one = net.forward_with_taps(x.row(i));
        EXPECT_LE((one.logits - batch.logits.row(i)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((one.taps.at(1) - batch.taps.at(1).row(i)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(RefNet, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 gen(seed);
        const auto net = jittered({6, 8, 8, 8, 3}, seed);
        const Matrix x = testing::random_matrix(gen, 10, 6);
        std::vector<int> y(10);
        for (int i = 0; i < 10; ++i) y[static_cast<std::size_t>(i)] = i % 3;
        const auto gc = testing::gradient_check(net, x, y);
        EXPECT_LE(gc.max_rel, 1e-5) << "seed " << seed;
        EXPECT_EQ(gc.params, 6u * 8 + 8 + 8 * 8 + 8 + 8 * 8 + 8 + 8 * 3 + 3);
    }
}

TEST(RefNet, LossValidatesLabels) {
    const auto net = RefNet::init({2, 3, 2}, 0);
    const std::vector<int> bad{0, 2};
    EXPECT_THROW(net.loss(Matrix::Zero(2, 2), bad), DataError);
    const std::vector<int> short_y{0};
    EXPECT_THROW(net.loss(Matrix::Zero(2, 2), short_y), DataError);
    EXPECT_THROW(net.forward_with_taps(Matrix::Zero(2, 3)), DataError);
    EXPECT_THROW(RefNet::init({3}, 0), ConfigError);
}

TEST(Train, SeparableBlobsReachHighAccuracy) {
    const auto task = make_blobs({2, 8, 100, 50, 6.0}, 5);
    TrainSpec spec;
    spec.seed = 5;
    const auto r = train(RefNet::init({8, 16, 16, 2}, 5), task.x_train, task.y_train, spec);
    EXPECT_LE(r.epoch_accuracy.size(), 50u);
    EXPECT_GE(r.epoch_accuracy.back(), 0.99);
    EXPECT_GE(accuracy(r.net, task.x_train, task.y_train), 0.99);
}

TEST(Train, ZeroEpochsLeavesNetUnchanged) {
    const auto task = make_blobs({3, 4, 10, 10, 2.0}, 1);
    const auto net = RefNet::init({4, 5, 3}, 9);
    TrainSpec spec;
    spec.epochs = 0;
    const auto r = train(net, task.x_train, task.y_train, spec);
    EXPECT_EQ(model_to_json(r.net), model_to_json(net));
    EXPECT_TRUE(r.epoch_accuracy.empty());
}

TEST(Train, Deterministic) {
    const auto task = make_blobs({3, 4, 30, 10, 2.0}, 2);
    TrainSpec spec;
    spec.epochs = 3;
    spec.seed = 11;
    spec.label_shuffle = 0.5;
    const auto a = train(RefNet::init({4, 6, 3}, 1), task.x_train, task.y_train, spec);
    const auto b = train(RefNet::init({4, 6, 3}, 1), task.x_train, task.y_train, spec);
    EXPECT_EQ(model_to_json(a.net), model_to_json(b.net));
    EXPECT_EQ(a.labels, b.labels);
    spec.learning_rate = 0.0;
    EXPECT_THROW(train(RefNet::init({4, 6, 3}, 1), task.x_train, task.y_train, spec), ConfigError);
}

TEST(ShuffleLabels, PreservesHistogramAndFraction) {
    std::vector<int> labels(1000);
    for (int i = 0; i < 1000; ++i) labels[static_cast<std::size_t>(i)] = i % 10;
    EXPECT_EQ(shuffle_labels(labels, 0.0, 1), labels);
    const auto s = shuffle_labels(labels, 0.5, 1);
    std::vector<int> h1(10), h2(10);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++h1[static_cast<std::size_t>(labels[i])];
        ++h2[static_cast<std::size_t>(s[i])];
        changed += labels[i] != s[i];
    }
    EXPECT_EQ(h1, h2);
    EXPECT_LE(changed, 500u);
    EXPECT_GT(changed, 350u);
    EXPECT_THROW(shuffle_labels(labels, 1.5, 1), ConfigError);
}

TEST(Gap, WithinBounds) {
    const auto task = make_blobs({4, 6, 20, 20, 1.0}, 3);
    TrainSpec spec;
    spec.epochs = 5;
    const auto r = train(RefNet::init({6, 12, 4}, 3), task.x_train, task.y_train, spec);
    const double gap = generalization_gap(r.net, task.x_train, task.y_train, task.x_test, task.y_test);
    EXPECT_GE(gap, -1.0);
    EXPECT_LE(gap, 1.0);
}

TEST(Blobs, ShapesAndBalance) {
    const auto task = make_blobs({3, 5, 7, 4, 2.0}, 4);
    EXPECT_EQ(task.x_train.rows(), 21);
    EXPECT_EQ(task.x_test.rows(), 12);
    EXPECT_EQ(task.x_train.cols(), 5);
    EXPECT_EQ(std::count(task.y_train.begin(), task.y_train.end(), 2), 7);
}

TEST(ModelFile, RoundTripIsExact) {
    const auto dir = testing::scratch_dir("model");
    const auto net = jittered({3, 4, 4, 2}, 8);
    write_model((dir / "m.json").string(), net);
    const auto back = read_model((dir / "m.json").string());
    EXPECT_EQ(model_to_json(back), model_to_json(net));
    std::ofstream(dir / "bad.json") << R"({"dims":[3,2],"layers":[{"w":[[1,2]],"b":[0,0]}]})";
    EXPECT_THROW(read_model((dir / "bad.json").string()), DataError);
    std::ofstream(dir / "junk.json") << "{";
    EXPECT_THROW(read_model((dir / "junk.json").string()), FormatError);
}

// Scoring an in-memory manifest equals scoring the same taps written to disk.
TEST(Bridge, InMemoryMatchesFileManifest) {
    const auto task = make_blobs({3, 6, 40, 10, 2.0}, 6);
    TrainSpec spec;
    spec.epochs = 3;
    const auto r = train(RefNet::init({6, 10, 10, 10, 3}, 6), task.x_train, task.y_train, spec);
    const auto mem = make_manifest(r.net, task.x_train, task.y_train);

    const auto dir = testing::scratch_dir("bridge");
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : mem.layers) {
        const auto file = l.name + ".npy";
        write_npy((dir / file).string(), l.embeddings.data());
        layers.push_back({{"name", l.name}, {"file", file}, {"depth_from_end", l.depth_from_end}});
    }
    write_npy((dir / "labels.npy").string(), mem.labels);
    std::ofstream(dir / "manifest.json") << nlohmann::json{{"layers", layers}, {"labels", "labels.npy"},
                                                           {"num_classes", 3}}
                                                .dump();
    const auto disk = load_manifest((dir / "manifest.json").string());
    for (auto preset : {ScorePreset::vr(), ScorePreset::wcv()}) {
        preset.n_graphs = 3;
        EXPECT_NEAR(run_score(mem, preset, 4).final_score, run_score(disk, preset, 4).final_score, 1e-9);
    }
    auto vpm = ScorePreset::vpm();
    vpm.n_graphs = 4;
    const Embedder emb = make_embedder(r.net);
    const auto a = run_score(mem, vpm, 2, {1, &emb});
    const auto b = run_score(mem, vpm, 2, {3, &emb});
    EXPECT_EQ(a.final_score, b.final_score);
    EXPECT_EQ(a.layer_names.at(2), "hidden2");
}

}  // namespace
}  // namespace lgg
