#ifndef SGL_IO_MEASUREMENT_IO_HPP
#define SGL_IO_MEASUREMENT_IO_HPP

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "sgl/error.hpp"
#include "sgl/io/atomic_file.hpp"

namespace sgl::io {

/// Binary layout: the 8 bytes "SGLMAT01", uint64 rows, uint64 cols, then
/// rows*cols IEEE-754 doubles in column-major order, all little-endian.
inline constexpr std::string_view kMatrixMagic = "SGLMAT01";

enum class MatrixFormat { binary, csv };

namespace detail {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

inline void put_u64(std::string& out, std::uint64_t v) {
  v = to_little(v);
  char bytes[8];
  std::memcpy(bytes, &v, 8);
  out.append(bytes, 8);
}

inline std::uint64_t get_u64(std::string_view in, std::size_t offset) {
  std::uint64_t v = 0;
  std::memcpy(&v, in.data() + offset, 8);
  return to_little(v);
}

}  // namespace detail

inline std::string format_matrix_binary(const Eigen::MatrixXd& A) {
  std::string out(kMatrixMagic);
  out.reserve(24 + static_cast<std::size_t>(A.size()) * 8);
  detail::put_u64(out, static_cast<std::uint64_t>(A.rows()));
  detail::put_u64(out, static_cast<std::uint64_t>(A.cols()));
  for (Eigen::Index i = 0; i < A.size(); ++i) {
    detail::put_u64(out, std::bit_cast<std::uint64_t>(A.data()[i]));
  }
  return out;
}

inline Eigen::MatrixXd parse_matrix_binary(std::string_view in, const std::string& source = "<input>") {
  if (in.size() < 24 || in.substr(0, 8) != kMatrixMagic) {
    throw IoError(source + ": not an SGLMAT01 binary matrix");
  }
  const std::uint64_t rows = detail::get_u64(in, 8);
  const std::uint64_t cols = detail::get_u64(in, 16);
  if (cols != 0 && rows > (in.size() - 24) / 8 / cols) {
    throw IoError(source + ": header declares more data than the file holds");
  }
  if (in.size() != 24 + rows * cols * 8) {
    throw IoError(fmt::format("{}: expected {} bytes for a {}x{} matrix, found {}", source,
                              24 + rows * cols * 8, rows, cols, in.size()));
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < A.size(); ++i) {
    A.data()[i] = std::bit_cast<double>(detail::get_u64(in, 24 + 8 * static_cast<std::size_t>(i)));
  }
  return A;
}

/// One matrix row per line, comma separated, shortest round-trip digits.
inline std::string format_matrix_csv(const Eigen::MatrixXd& A) {
  std::string out;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (j > 0) out += ',';
      out += fmt::format("{}", A(i, j));
    }
    out += '\n';
  }
  return out;
}

/// Blank lines and lines starting with '#' are skipped.
inline Eigen::MatrixXd parse_matrix_csv(std::string_view in, const std::string& source = "<input>") {
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, line_no = 0;
  while (!in.empty()) {
    const auto end = in.find('\n');
    std::string_view line = in.substr(0, end);
    in = end == std::string_view::npos ? std::string_view{} : in.substr(end + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#') continue;
    std::size_t count = 0;
    while (true) {
      const auto comma = line.find(',');
      std::string_view cell = line.substr(0, comma);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) {
        throw IoError(fmt::format("{}:{}: invalid number '{}'", source, line_no, cell));
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0) cols = count;
    if (count != cols) {
      throw IoError(fmt::format("{}:{}: expected {} columns, found {}", source, line_no, cols, count));
    }
    ++rows;
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * cols + j];
    }
  }
  return A;
}

inline void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& A,
                         MatrixFormat format = MatrixFormat::binary) {
  write_file_atomic(path, format == MatrixFormat::binary ? format_matrix_binary(A) : format_matrix_csv(A));
}

/// Reads either format; binary files are recognized by their magic bytes.
inline Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (std::string_view(data).substr(0, 8) == kMatrixMagic) return parse_matrix_binary(data, path.string());
  return parse_matrix_csv(data, path.string());
}

}  // namespace sgl::io

#endif  // SGL_IO_MEASUREMENT_IO_HPP
