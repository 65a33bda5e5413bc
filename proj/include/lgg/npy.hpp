// Minimal NumPy .npy (format 1.0) reader/writer.
//
// Supported payloads: little-endian float32/float64/int32/int64, C order,
// 1-D or 2-D. Everything is widened to double on read.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lgg/error.hpp"

namespace lgg::npy {

static_assert(std::endian::native == std::endian::little, "npy codec assumes a little-endian host");

enum class DType { f4, f8, i4, i8 };

inline std::string_view descr(DType t) {
    switch (t) {
        case DType::f4: return "<f4";
        case DType::f8: return "<f8";
        case DType::i4: return "<i4";
        case DType::i8: return "<i8";
    }
    return "";
}

inline std::size_t item_size(DType t) {
    return (t == DType::f4 || t == DType::i4) ? 4 : 8;
}

struct Array {
    DType dtype = DType::f8;
    std::vector<std::size_t> shape;
    std::vector<double> values;

    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() >= 2 ? shape[1] : 1; }
};

inline constexpr std::string_view kMagic = "\x93NUMPY";

namespace detail {

inline DType parse_descr(const std::string& d) {
    if (d == "<f4") return DType::f4;
    if (d == "<f8") return DType::f8;
    if (d == "<i4") return DType::i4;
    if (d == "<i8") return DType::i8;
    throw FormatError("unsupported npy dtype '" + d + "' (expected <f4, <f8, <i4 or <i8)");
}

template <typename T>
T load_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

template <typename T>
void append_le(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

}  // namespace detail

/// Decode an in-memory .npy image. `origin` is only used in messages.
inline Array decode(std::string_view bytes, const std::string& origin = "<memory>") {
    if (bytes.size() < 10 || bytes.substr(0, 6) != kMagic) {
        throw FormatError(origin + ": not an npy file (bad magic)");
    }
    const auto major = static_cast<unsigned char>(bytes[6]);
    const auto minor = static_cast<unsigned char>(bytes[7]);
    if (major != 1 || minor != 0) {
        throw FormatError(origin + ": unsupported npy version " + std::to_string(major) + "." +
                          std::to_string(minor));
    }
    const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                   (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
    if (bytes.size() < 10 + header_len) {
        throw FormatError(origin + ": truncated npy header");
    }
    const std::string header(bytes.substr(10, header_len));

    static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
    static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
    static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
    std::smatch m;
    if (!std::regex_search(header, m, descr_re)) throw FormatError(origin + ": npy header lacks 'descr'");
    Array out;
    out.dtype = detail::parse_descr(m[1].str());
    if (!std::regex_search(header, m, order_re)) {
        throw FormatError(origin + ": npy header lacks 'fortran_order'");
    }
    if (m[1].str() == "True") throw FormatError(origin + ": fortran_order arrays are not supported");
    if (!std::regex_search(header, m, shape_re)) throw FormatError(origin + ": npy header lacks 'shape'");

    std::stringstream dims(m[1].str());
    std::string tok;
    while (std::getline(dims, tok, ',')) {
        const auto first = tok.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto last = tok.find_last_not_of(" \tL");
        const std::string digits = tok.substr(first, last - first + 1);
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
            throw FormatError(origin + ": malformed npy shape entry '" + tok + "'");
        }
        out.shape.push_back(std::stoull(digits));
    }
    if (out.shape.empty() || out.shape.size() > 2) {
        throw FormatError(origin + ": only 1-D and 2-D npy arrays are supported");
    }

    std::size_t count = 1;
    for (auto d : out.shape) count *= d;
    const std::size_t width = item_size(out.dtype);
    const std::string_view payload = bytes.substr(10 + header_len);
    if (payload.size() != count * width) {
        throw FormatError(origin + ": npy payload has " + std::to_string(payload.size()) +
                          " bytes, expected " + std::to_string(count * width));
    }
    out.values.resize(count);
    const char* p = payload.data();
    for (std::size_t k = 0; k < count; ++k, p += width) {
        switch (out.dtype) {
            case DType::f4: out.values[k] = detail::load_le<float>(p); break;
            case DType::f8: out.values[k] = detail::load_le<double>(p); break;
            case DType::i4: out.values[k] = detail::load_le<std::int32_t>(p); break;
            case DType::i8: out.values[k] = static_cast<double>(detail::load_le<std::int64_t>(p)); break;
        }
    }
    return out;
}

inline std::string encode(const Array& a) {
    std::size_t count = 1;
    for (auto d : a.shape) count *= d;
    if (a.shape.empty() || a.shape.size() > 2 || count != a.values.size()) {
        throw DataError("npy encode: shape does not match value count");
    }
    std::string header = "{'descr': '" + std::string(descr(a.dtype)) + "', 'fortran_order': False, 'shape': (";
    header += std::to_string(a.shape[0]);
    header += a.shape.size() == 1 ? "," : ", " + std::to_string(a.shape[1]);
    header += "), }";
    // magic(6) + version(2) + length(2) + header + '\n' padded to 64
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');

    std::string out(kMagic);
    out.push_back('\x01');
    out.push_back('\x00');
    out.push_back(static_cast<char>(header.size() & 0xff));
    out.push_back(static_cast<char>((header.size() >> 8) & 0xff));
    out += header;
    out.reserve(out.size() + count * item_size(a.dtype));
    for (double v : a.values) {
        switch (a.dtype) {
            case DType::f4: detail::append_le(out, static_cast<float>(v)); break;
            case DType::f8: detail::append_le(out, v); break;
            case DType::i4: detail::append_le(out, static_cast<std::int32_t>(v)); break;
            case DType::i8: detail::append_le(out, static_cast<std::int64_t>(v)); break;
        }
    }
    return out;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Array read(const std::string& path) { return decode(slurp(path), path); }

inline void write(const std::string& path, const Array& a) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    const std::string bytes = encode(a);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace lgg::npy
