#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lconv/matrix.hpp"

namespace lieconv {

/// Binary layout: "LCONVMAT" | u32 version | u64 rows | u64 cols | rows·cols
/// little-endian IEEE-754 doubles, row-major. All integers little-endian.
inline constexpr char kMatrixMagic[8] = {'L', 'C', 'O', 'N', 'V', 'M', 'A', 'T'};
inline constexpr std::uint32_t kMatrixFormatVersion = 1;
inline constexpr std::size_t kMatrixHeaderBytes = 8 + 4 + 8 + 8;

std::vector<unsigned char> encode_matrix(const Matrix& m);
Matrix decode_matrix(std::span<const unsigned char> bytes);

void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

/// RFC-4180 CSV with '.' decimal separator and shortest round-trip doubles.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(std::vector<std::string> fields);
  std::string str() const;
  void write(const std::filesystem::path& path) const;
  std::size_t row_count() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lieconv
