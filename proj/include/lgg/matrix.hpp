#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lgg/error.hpp"

namespace lgg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Rows of `m` in the order given by `idx`.
inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> idx) {
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= static_cast<std::size_t>(m.rows())) {
            throw DataError("row index " + std::to_string(idx[r]) + " out of range for " +
                            std::to_string(m.rows()) + " rows");
        }
        out.row(static_cast<Index>(r)) = m.row(static_cast<Index>(idx[r]));
    }
    return out;
}

/// Latent representations of N samples at one layer (N x D, finite, N, D >= 1).
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;

    explicit EmbeddingMatrix(Matrix data) : data_(std::move(data)) {
        if (data_.rows() < 1 || data_.cols() < 1) {
            throw DataError("embedding matrix must have at least one row and one column, got " +
                            std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()));
        }
        for (Index i = 0; i < data_.rows(); ++i) {
            if (!data_.row(i).allFinite()) {
                throw DataError("embedding row " + std::to_string(i) + " contains a non-finite value");
            }
        }
    }

    Index rows() const { return data_.rows(); }
    Index cols() const { return data_.cols(); }
    const Matrix& data() const { return data_; }

    EmbeddingMatrix select(std::span<const std::size_t> idx) const {
        return EmbeddingMatrix(select_rows(data_, idx));
    }

private:
    Matrix data_;
};

/// N x C label signal with rows on the probability simplex.
class LabelMatrix {
public:
    static constexpr double kRowSumTolerance = 1e-9;

    LabelMatrix() = default;

    explicit LabelMatrix(Matrix data) : data_(std::move(data)) {
        if (data_.rows() < 1 || data_.cols() < 1) {
            throw DataError("label matrix must be non-empty");
        }
        for (Index i = 0; i < data_.rows(); ++i) {
            double sum = 0.0;
            for (Index c = 0; c < data_.cols(); ++c) {
                const double v = data_(i, c);
                if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                    throw DataError("label row " + std::to_string(i) + " has entry outside [0,1]");
                }
                sum += v;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance) {
                throw DataError("label row " + std::to_string(i) + " sums to " + std::to_string(sum) +
                                ", expected 1");
            }
        }
    }

    Index rows() const { return data_.rows(); }
    Index cols() const { return data_.cols(); }
    const Matrix& data() const { return data_; }

    bool is_one_hot() const {
        return ((data_.array() == 0.0) || (data_.array() == 1.0)).all();
    }

    LabelMatrix select(std::span<const std::size_t> idx) const {
        return LabelMatrix(select_rows(data_, idx));
    }

private:
    Matrix data_;
};

/// Class indicator matrix for integer labels in [0, num_classes).
inline LabelMatrix one_hot(std::span<const int> labels, int num_classes) {
    if (num_classes < 1) {
        throw ConfigError("num_classes must be positive, got " + std::to_string(num_classes));
    }
    if (labels.empty()) {
        throw DataError("one_hot: empty label vector");
    }
    Matrix y = Matrix::Zero(static_cast<Index>(labels.size()), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw DataError("label at index " + std::to_string(i) + " has value " +
                            std::to_string(labels[i]) + ", outside [0, " +
                            std::to_string(num_classes) + ")");
        }
        y(static_cast<Index>(i), labels[i]) = 1.0;
    }
    return LabelMatrix(std::move(y));
}

/// Concatenate two matrices vertically.
inline Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.rows() == 0) return bottom;
    if (bottom.rows() == 0) return top;
    if (top.cols() != bottom.cols()) {
        throw DataError("vstack: column mismatch " + std::to_string(top.cols()) + " vs " +
                        std::to_string(bottom.cols()));
    }
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

}  // namespace lgg
