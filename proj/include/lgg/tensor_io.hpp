#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "lgg/error.hpp"
#include "lgg/matrix.hpp"
#include "lgg/npy.hpp"

namespace lgg {

/// Parse headerless comma-separated decimals. Blank lines are skipped.
inline Matrix parse_csv(std::string_view text, const std::string& origin = "<memory>") {
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        std::size_t fields = 0;
        while (true) {
            const auto comma = line.find(',');
            std::string_view cell = line.substr(0, comma);
            while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
            while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
            if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
                throw FormatError(origin + ":" + std::to_string(line_no) + ": cannot parse '" +
                                  std::string(cell) + "' as a number");
            }
            if (!std::isfinite(v)) {
                throw DataError(origin + ":" + std::to_string(line_no) + ": non-finite value");
            }
            values.push_back(v);
            ++fields;
            if (comma == std::string_view::npos) break;
            line.remove_prefix(comma + 1);
        }
        if (rows == 0) {
            cols = fields;
        } else if (fields != cols) {
            throw FormatError(origin + ":" + std::to_string(line_no) + ": ragged row with " +
                              std::to_string(fields) + " fields, expected " + std::to_string(cols));
        }
        ++rows;
    }
    if (rows == 0) throw FormatError(origin + ": empty CSV");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

/// Read a .npy or CSV file as a 2-D double matrix (1-D arrays become N x 1).
inline Matrix read_array(const std::string& path) {
    const std::string bytes = npy::slurp(path);
    if (bytes.starts_with(npy::kMagic)) {
        const npy::Array a = npy::decode(bytes, path);
        Matrix m(static_cast<Index>(a.rows()), static_cast<Index>(a.cols()));
        std::copy(a.values.begin(), a.values.end(), m.data());
        for (Index i = 0; i < m.rows(); ++i) {
            if (!m.row(i).allFinite()) {
                throw DataError(path + ": row " + std::to_string(i) + " contains a non-finite value");
            }
        }
        return m;
    }
    return parse_csv(bytes, path);
}

inline EmbeddingMatrix read_array_file(const std::string& path) {
    return EmbeddingMatrix(read_array(path));
}

inline void write_npy(const std::string& path, const Matrix& m, npy::DType dtype = npy::DType::f8) {
    npy::Array a;
    a.dtype = dtype;
    a.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
    a.values.assign(m.data(), m.data() + m.size());
    npy::write(path, a);
}

inline void write_npy(const std::string& path, std::span<const int> labels) {
    npy::Array a;
    a.dtype = npy::DType::i8;
    a.shape = {labels.size()};
    a.values.assign(labels.begin(), labels.end());
    npy::write(path, a);
}

/// Integer class labels (hard) or an N x C soft label matrix.
using Labels = std::variant<std::vector<int>, LabelMatrix>;

/// Interpret a label array: a vector (or N x 1) holds integer classes, an N x C matrix holds soft labels.
inline Labels labels_from_matrix(const Matrix& m, int num_classes, const std::string& origin) {
    if (m.cols() == 1 && num_classes != 1) {
        std::vector<int> out(static_cast<std::size_t>(m.rows()));
        for (Index i = 0; i < m.rows(); ++i) {
            const double v = m(i, 0);
            if (v != std::floor(v)) {
                throw DataError(origin + ": label at index " + std::to_string(i) + " is not an integer");
            }
            if (v < 0 || v >= num_classes) {
                throw DataError(origin + ": label at index " + std::to_string(i) + " has value " +
                                std::to_string(static_cast<long long>(v)) + ", outside [0, " +
                                std::to_string(num_classes) + ")");
            }
            out[static_cast<std::size_t>(i)] = static_cast<int>(v);
        }
        return out;
    }
    if (m.cols() != num_classes) {
        throw DataError(origin + ": label matrix has " + std::to_string(m.cols()) + " columns but num_classes is " +
                        std::to_string(num_classes));
    }
    return LabelMatrix(m);
}

inline Labels read_labels(const std::string& path, int num_classes) {
    return labels_from_matrix(read_array(path), num_classes, path);
}

}  // namespace lgg
