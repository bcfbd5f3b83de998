#include "dgx/bytes.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <iterator>

namespace dgx {

void append_u32_le(std::string& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) {
        out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
    }
}

void append_u64_le(std::string& out, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
        out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
    }
}

void append_f64_le(std::string& out, double v) { append_u64_le(out, std::bit_cast<std::uint64_t>(v)); }

std::string_view ByteReader::take(std::uint64_t n) {
    if (n > remaining()) {
        throw FormatError(what_ + ": truncated (needed " + std::to_string(n) + " bytes at offset " +
                          std::to_string(pos_) + ", " + std::to_string(remaining()) + " available)");
    }
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
}

std::uint32_t ByteReader::u32() {
    const std::string_view s = take(4);
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) {
        v = (v << 8) | static_cast<unsigned char>(s[static_cast<std::size_t>(k)]);
    }
    return v;
}

std::uint64_t ByteReader::u64() {
    const std::string_view s = take(8);
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) {
        v = (v << 8) | static_cast<unsigned char>(s[static_cast<std::size_t>(k)]);
    }
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw Error("write failed for " + path.string());
    }
}

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::array<int, 256> make_decode_table() {
    std::array<int, 256> table{};
    for (auto& v : table) {
        v = -1;
    }
    for (std::size_t i = 0; i < kAlphabet.size(); ++i) {
        table[static_cast<unsigned char>(kAlphabet[i])] = static_cast<int>(i);
    }
    return table;
}

constexpr auto kDecode = make_decode_table();

}  // namespace

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                                (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                                static_cast<unsigned char>(bytes[i + 2]);
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back(kAlphabet[v & 63]);
    }
    const std::size_t rest = bytes.size() - i;
    if (rest > 0) {
        std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
        if (rest == 2) {
            v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
        }
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(rest == 2 ? kAlphabet[(v >> 6) & 63] : '=');
        out.push_back('=');
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) {
        throw FormatError("base64: length " + std::to_string(text.size()) + " is not a multiple of 4");
    }
    std::string out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        std::uint32_t v = 0;
        int pad = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=' && i + 4 == text.size() && k >= 2) {
                ++pad;
                v <<= 6;
                continue;
            }
            const int d = kDecode[static_cast<unsigned char>(c)];
            if (d < 0 || pad > 0) {
                throw FormatError("base64: invalid character at offset " + std::to_string(i + k));
            }
            v = (v << 6) | static_cast<std::uint32_t>(d);
        }
        out.push_back(static_cast<char>((v >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<char>((v >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<char>(v & 0xff));
    }
    return out;
}

std::string encode_matrix_b64(const Matrix& m) {
    std::string raw;
    raw.reserve(static_cast<std::size_t>(m.size()) * 8);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            append_f64_le(raw, m(i, j));
        }
    }
    return base64_encode(raw);
}

Matrix decode_matrix_b64(std::string_view text, Eigen::Index rows, Eigen::Index cols) {
    const std::string raw = base64_decode(text);
    if (raw.size() != static_cast<std::size_t>(rows * cols * 8)) {
        throw FormatError("tensor payload has " + std::to_string(raw.size()) + " bytes, expected " +
                          std::to_string(rows * cols * 8));
    }
    ByteReader in(raw, "tensor");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = in.f64();
        }
    }
    return m;
}

std::string encode_vector_b64(const Vector& v) { return encode_matrix_b64(v.transpose()); }

Vector decode_vector_b64(std::string_view text, Eigen::Index size) {
    return decode_matrix_b64(text, 1, size).transpose();
}

std::string format_double(double v) {
    std::array<char, 40> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);  // shortest round-trip form
    return {buf.data(), res.ptr};
}

}  // namespace dgx
