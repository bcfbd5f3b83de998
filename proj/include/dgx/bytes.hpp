#pragma once

#include "dgx/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace dgx {

void append_u32_le(std::string& out, std::uint32_t v);
void append_u64_le(std::string& out, std::uint64_t v);
void append_f64_le(std::string& out, double v);

/// Bounds-checked little-endian reader; overruns raise FormatError naming `what`.
class ByteReader {
public:
    ByteReader(std::string_view bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::string_view take(std::uint64_t n);
    void skip(std::uint64_t n) { take(n); }
    [[nodiscard]] std::uint64_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
    std::string what_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

/// Row-major little-endian f64 payload, base64-encoded.
std::string encode_matrix_b64(const Matrix& m);
Matrix decode_matrix_b64(std::string_view text, Eigen::Index rows, Eigen::Index cols);
std::string encode_vector_b64(const Vector& v);
Vector decode_vector_b64(std::string_view text, Eigen::Index size);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace dgx
