// A small fully connected ReLU classifier with layer taps.
//
// Stands in for the externally trained networks whose latent spaces are
// scored: forward passes expose the last three hidden post-activations as
// taps keyed by depth_from_end (1 = last hidden layer).
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgg/error.hpp"
#include "lgg/manifest.hpp"
#include "lgg/matrix.hpp"
#include "lgg/rng.hpp"
#include "lgg/scoring.hpp"

namespace lgg {

using RowVector = Eigen::RowVectorXd;

struct DenseLayer {
    Matrix w;     ///< fan_in x fan_out
    RowVector b;  ///< 1 x fan_out
};

struct ForwardResult {
    Matrix logits;
    Matrix probs;
    /// Hidden post-activations keyed by depth_from_end (at most 3 entries).
    std::map<int, Matrix> taps;
};

struct Gradients {
    std::vector<Matrix> w;
    std::vector<RowVector> b;
};

class RefNet {
public:
    RefNet() = default;

    /// dims = [input, hidden..., classes]. Glorot-uniform weights, zero biases.
    static RefNet init(std::vector<int> dims, std::uint64_t seed) {
        if (dims.size() < 2) throw ConfigError("network needs at least input and output dimensions");
        for (int d : dims)
            if (d < 1) throw ConfigError("layer dimensions must be positive");
        RefNet net;
        net.dims_ = std::move(dims);
        SplitMix64 rng(seed);
        for (std::size_t l = 0; l + 1 < net.dims_.size(); ++l) {
            const int fan_in = net.dims_[l];
            const int fan_out = net.dims_[l + 1];
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            DenseLayer layer{Matrix(fan_in, fan_out), RowVector::Zero(fan_out)};
            for (Index i = 0; i < layer.w.size(); ++i) layer.w.data()[i] = rng.uniform(-limit, limit);
            net.layers_.push_back(std::move(layer));
        }
        return net;
    }

    static RefNet from_layers(std::vector<int> dims, std::vector<DenseLayer> layers) {
        RefNet net;
        net.dims_ = std::move(dims);
        net.layers_ = std::move(layers);
        net.validate();
        return net;
    }

    const std::vector<int>& dims() const { return dims_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    int num_classes() const { return dims_.back(); }
    std::size_t hidden_layers() const { return layers_.size() - 1; }

    ForwardResult forward_with_taps(const Matrix& x) const {
        std::vector<Matrix> pre, post;
        ForwardResult r;
        r.logits = forward(x, pre, post);
        r.probs = softmax(r.logits);
        const std::size_t hidden = hidden_layers();
        for (int depth = 1; depth <= 3 && static_cast<std::size_t>(depth) <= hidden; ++depth) {
            r.taps.emplace(depth, post[hidden - static_cast<std::size_t>(depth) + 1]);
        }
        return r;
    }

    std::vector<int> predict(const Matrix& x) const {
        std::vector<Matrix> pre, post;
        const Matrix logits = forward(x, pre, post);
        std::vector<int> out(static_cast<std::size_t>(logits.rows()));
        for (Index i = 0; i < logits.rows(); ++i) {
            Index arg;
            logits.row(i).maxCoeff(&arg);
            out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
        }
        return out;
    }

    /// Mean cross-entropy over the batch; fills `grad` when given.
    double loss(const Matrix& x, std::span<const int> y, Gradients* grad = nullptr) const {
        if (static_cast<Index>(y.size()) != x.rows()) throw DataError("label count does not match batch size");
        std::vector<Matrix> pre, post;
        const Matrix logits = forward(x, pre, post);
        Matrix probs = softmax(logits);
        const auto n = static_cast<double>(x.rows());
        double total = 0.0;
        for (Index i = 0; i < probs.rows(); ++i) {
            const int c = y[static_cast<std::size_t>(i)];
            if (c < 0 || c >= num_classes()) throw DataError("label " + std::to_string(c) + " out of range");
            // log-sum-exp on the logits
            const double m = logits.row(i).maxCoeff();
            const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
            total += lse - logits(i, c);
        }
        if (grad) {
            Matrix delta = probs;
            for (Index i = 0; i < delta.rows(); ++i) delta(i, y[static_cast<std::size_t>(i)]) -= 1.0;
            delta /= n;
            grad->w.assign(layers_.size(), Matrix());
            grad->b.assign(layers_.size(), RowVector());
            for (std::size_t l = layers_.size(); l-- > 0;) {
                grad->w[l] = post[l].transpose() * delta;
                grad->b[l] = delta.colwise().sum();
                if (l > 0) {
                    delta = (delta * layers_[l].w.transpose()).cwiseProduct(
                        (pre[l - 1].array() > 0.0).cast<double>().matrix());
                }
            }
        }
        return total / n;
    }

private:
    /// post[0] = input, post[l] = activation feeding layer l; pre[l] = pre-activation of hidden layer l.
    Matrix forward(const Matrix& x, std::vector<Matrix>& pre, std::vector<Matrix>& post) const {
        if (x.cols() != dims_.front()) {
            throw DataError("input has " + std::to_string(x.cols()) + " columns, network expects " +
                            std::to_string(dims_.front()));
        }
        post.clear();
        pre.clear();
        post.push_back(x);
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
            Matrix z = post.back() * layers_[l].w;
            z.rowwise() += layers_[l].b;
            post.push_back(z.cwiseMax(0.0));
            pre.push_back(std::move(z));
        }
        Matrix logits = post.back() * layers_.back().w;
        logits.rowwise() += layers_.back().b;
        return logits;
    }

    static Matrix softmax(const Matrix& logits) {
        Matrix p = logits;
        for (Index i = 0; i < p.rows(); ++i) {
            p.row(i).array() -= p.row(i).maxCoeff();
            p.row(i) = p.row(i).array().exp().matrix();
            p.row(i) /= p.row(i).sum();
        }
        return p;
    }

    void validate() const {
        if (dims_.size() < 2 || layers_.size() != dims_.size() - 1) {
            throw DataError("network has " + std::to_string(layers_.size()) + " layers for " +
                            std::to_string(dims_.size()) + " dims");
        }
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& L = layers_[l];
            if (L.w.rows() != dims_[l] || L.w.cols() != dims_[l + 1] || L.b.size() != dims_[l + 1]) {
                throw DataError("layer " + std::to_string(l) + " shape does not match dims");
            }
            if (!L.w.allFinite() || !L.b.allFinite()) {
                throw DataError("layer " + std::to_string(l) + " has non-finite parameters");
            }
        }
    }

    std::vector<int> dims_;
    std::vector<DenseLayer> layers_;
};

inline double accuracy(const RefNet& net, const Matrix& x, std::span<const int> y) {
    if (y.empty()) throw DataError("accuracy of an empty set");
    const auto pred = net.predict(x);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
    return static_cast<double>(hit) / static_cast<double>(y.size());
}

/// Train accuracy minus test accuracy.
inline double generalization_gap(const RefNet& net, const Matrix& x_train, std::span<const int> y_train,
                                 const Matrix& x_test, std::span<const int> y_test) {
    return accuracy(net, x_train, y_train) - accuracy(net, x_test, y_test);
}

/// Permute the labels of a random `fraction` of the samples among themselves.
inline std::vector<int> shuffle_labels(std::vector<int> labels, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("label shuffle fraction must be in [0,1]");
    SplitMix64 rng(seed);
    std::vector<std::size_t> idx(labels.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(labels.size()))));
    std::vector<int> picked;
    for (auto i : idx) picked.push_back(labels[i]);
    rng.shuffle(picked);
    for (std::size_t t = 0; t < idx.size(); ++t) labels[idx[t]] = picked[t];
    return labels;
}

struct TrainSpec {
    int epochs = 50;
    int batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    double label_shuffle = 0.0;
    /// Stop early once train accuracy reaches this value (disabled when > 1).
    double target_accuracy = 2.0;

    void validate() const {
        if (epochs < 0) throw ConfigError("epochs must be non-negative");
        if (batch_size < 1) throw ConfigError("batch size must be positive");
        if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0,1)");
        if (!(label_shuffle >= 0.0 && label_shuffle <= 1.0)) throw ConfigError("label shuffle must be in [0,1]");
    }
};

struct TrainResult {
    RefNet net;
    std::vector<double> epoch_accuracy;
    /// Labels actually trained on (after the label shuffle).
    std::vector<int> labels;
};

/// Mini-batch SGD with momentum on mean cross-entropy. Single-threaded and
/// deterministic for a fixed spec.
inline TrainResult train(RefNet net, const Matrix& x, std::vector<int> y, const TrainSpec& spec) {
    spec.validate();
    if (static_cast<Index>(y.size()) != x.rows()) throw DataError("label count does not match sample count");
    TrainResult result;
    result.labels = spec.label_shuffle > 0.0 ? shuffle_labels(std::move(y), spec.label_shuffle, spec.seed ^ 0x5eedULL)
                                             : std::move(y);
    SplitMix64 rng(spec.seed);
    auto& layers = net.layers();
    std::vector<Matrix> vel_w;
    std::vector<RowVector> vel_b;
    for (const auto& l : layers) {
        vel_w.push_back(Matrix::Zero(l.w.rows(), l.w.cols()));
        vel_b.push_back(RowVector::Zero(l.b.size()));
    }
    std::vector<std::size_t> order(result.labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto bs = static_cast<std::size_t>(spec.batch_size);
    Gradients g;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t end = std::min(order.size(), start + bs);
            const std::span<const std::size_t> batch(order.data() + start, end - start);
            const Matrix xb = select_rows(x, batch);
            std::vector<int> yb;
            yb.reserve(batch.size());
            for (auto i : batch) yb.push_back(result.labels[i]);
            net.loss(xb, yb, &g);
            for (std::size_t l = 0; l < layers.size(); ++l) {
                vel_w[l] = spec.momentum * vel_w[l] - spec.learning_rate * g.w[l];
                vel_b[l] = spec.momentum * vel_b[l] - spec.learning_rate * g.b[l];
                layers[l].w += vel_w[l];
                layers[l].b += vel_b[l];
            }
        }
        for (const auto& l : layers) {
            if (!l.w.allFinite() || !l.b.allFinite()) {
                throw DataError("training diverged in epoch " + std::to_string(epoch + 1));
            }
        }
        result.epoch_accuracy.push_back(accuracy(net, x, result.labels));
        if (result.epoch_accuracy.back() >= spec.target_accuracy) break;
    }
    result.net = std::move(net);
    return result;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct BlobSpec {
    int classes = 4;
    int dim = 16;
    int train_per_class = 100;
    int test_per_class = 100;
    /// Distance of every class mean from the origin (noise std is 1).
    double separation = 3.0;
};

struct BlobTask {
    Matrix x_train;
    std::vector<int> y_train;
    Matrix x_test;
    std::vector<int> y_test;
};

/// Class-conditional isotropic Gaussian blobs around random class means.
inline BlobTask make_blobs(const BlobSpec& spec, std::uint64_t seed) {
    if (spec.classes < 2 || spec.dim < 1 || spec.train_per_class < 1 || spec.test_per_class < 1) {
        throw ConfigError("blob spec needs >= 2 classes and positive sizes");
    }
    SplitMix64 rng(seed);
    Matrix means(spec.classes, spec.dim);
    for (Index c = 0; c < means.rows(); ++c) {
        for (Index d = 0; d < means.cols(); ++d) means(c, d) = rng.normal();
        means.row(c) *= spec.separation / means.row(c).norm();
    }
    auto draw = [&](int per_class, Matrix& x, std::vector<int>& y) {
        const int n = per_class * spec.classes;
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % spec.classes;
        rng.shuffle(labels);
        x.resize(n, spec.dim);
        for (int i = 0; i < n; ++i) {
            const int c = labels[static_cast<std::size_t>(i)];
            for (int d = 0; d < spec.dim; ++d) x(i, d) = means(c, d) + rng.normal();
        }
        y = std::move(labels);
    };
    BlobTask task;
    draw(spec.train_per_class, task.x_train, task.y_train);
    draw(spec.test_per_class, task.x_test, task.y_test);
    return task;
}

// ---------------------------------------------------------------------------
// Bridges to scoring

/// Embedder that forwards inputs through `net` and returns its taps. The
/// network must outlive the embedder.
inline Embedder make_embedder(const RefNet& net) {
    return [&net](const Matrix& inputs) { return net.forward_with_taps(inputs).taps; };
}

/// In-memory manifest over the net's taps for samples `x` with labels `y`.
inline DatasetManifest make_manifest(const RefNet& net, const Matrix& x, std::vector<int> y) {
    const auto fwd = net.forward_with_taps(x);
    DatasetManifest m;
    for (const auto& [depth, act] : fwd.taps) {
        m.layers.push_back({"hidden" + std::to_string(net.hidden_layers() + 1 - static_cast<std::size_t>(depth)),
                            "", depth, EmbeddingMatrix(act)});
    }
    m.labels = std::move(y);
    m.num_classes = net.num_classes();
    m.inputs = x;
    m.validate();
    return m;
}

// ---------------------------------------------------------------------------
// Model file

inline nlohmann::json model_to_json(const RefNet& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers()) {
        nlohmann::json w = nlohmann::json::array();
        for (Index i = 0; i < l.w.rows(); ++i) w.push_back(std::vector<double>(l.w.row(i).begin(), l.w.row(i).end()));
        layers.push_back({{"w", w}, {"b", std::vector<double>(l.b.begin(), l.b.end())}});
    }
    return {{"dims", net.dims()}, {"layers", layers}};
}

inline RefNet model_from_json(const nlohmann::json& j) {
    try {
        auto dims = j.at("dims").get<std::vector<int>>();
        std::vector<DenseLayer> layers;
        for (const auto& lj : j.at("layers")) {
            const auto rows = lj.at("w").get<std::vector<std::vector<double>>>();
            const auto b = lj.at("b").get<std::vector<double>>();
            DenseLayer l{Matrix(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size())),
                         RowVector(static_cast<Index>(b.size()))};
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (static_cast<Index>(rows[r].size()) != l.w.cols()) throw DataError("ragged weight matrix");
                for (std::size_t c = 0; c < rows[r].size(); ++c) l.w(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
            }
            for (std::size_t c = 0; c < b.size(); ++c) l.b(static_cast<Index>(c)) = b[c];
            layers.push_back(std::move(l));
        }
        return RefNet::from_layers(std::move(dims), std::move(layers));
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("malformed model file: ") + ex.what());
    }
}

inline void write_model(const std::string& path, const RefNet& net) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << model_to_json(net).dump() << '\n';
}

inline RefNet read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model '" + path + "'");
    try {
        return model_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& ex) {
        throw FormatError(path + ": " + ex.what());
    }
}

}  // namespace lgg
