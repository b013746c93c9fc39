#include "lconv/matrix_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "lconv/error.hpp"

namespace lieconv {

namespace {

void put_le(std::vector<unsigned char>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(std::span<const unsigned char> in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
  return v;
}

bool needs_quotes(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

}  // namespace

std::vector<unsigned char> encode_matrix(const Matrix& m) {
  if (!m.all_finite()) throw FormatError("refusing to write non-finite matrix entries", 0);
  std::vector<unsigned char> out;
  out.reserve(kMatrixHeaderBytes + 8 * m.size());
  out.resize(sizeof kMatrixMagic);
  std::memcpy(out.data(), kMatrixMagic, sizeof kMatrixMagic);
  put_le(out, kMatrixFormatVersion, 4);
  put_le(out, m.rows(), 8);
  put_le(out, m.cols(), 8);
  for (double v : m.data()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

Matrix decode_matrix(std::span<const unsigned char> bytes) {
  if (bytes.size() < 8) throw FormatError("truncated header: missing magic", bytes.size());
  if (std::memcmp(bytes.data(), kMatrixMagic, 8) != 0) throw FormatError("bad magic", 0);
  if (bytes.size() < 12) throw FormatError("truncated header: missing version", bytes.size());
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 8, 4));
  if (version != kMatrixFormatVersion) {
    throw FormatError("unsupported version " + std::to_string(version), 8);
  }
  if (bytes.size() < kMatrixHeaderBytes) {
    throw FormatError("truncated header: missing shape", bytes.size());
  }
  const std::uint64_t rows = get_le(bytes, 12, 8);
  const std::uint64_t cols = get_le(bytes, 20, 8);
  if (cols != 0 && rows > (UINT64_MAX / 8) / cols) throw FormatError("shape overflows", 12);
  const std::uint64_t payload = rows * cols * 8;
  const std::uint64_t available = bytes.size() - kMatrixHeaderBytes;
  if (available < payload) {
    // report the offset of the first missing byte
    throw FormatError("truncated payload: expected " + std::to_string(payload) + " bytes, found " +
                          std::to_string(available),
                      bytes.size());
  }
  if (available > payload) {
    throw FormatError("trailing bytes after payload", kMatrixHeaderBytes + payload);
  }
  std::vector<double> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t off = kMatrixHeaderBytes + 8 * i;
    data[i] = std::bit_cast<double>(get_le(bytes, off, 8));
    if (!std::isfinite(data[i])) throw FormatError("non-finite entry", off);
  }
  return Matrix(rows, cols, std::move(data));
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  const auto bytes = encode_matrix(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_matrix(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<std::string> fields) {
  if (fields.size() != header_.size()) {
    throw DimensionError("csv row has " + std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(header_.size()));
  }
  rows_.push_back(std::move(fields));
}

std::string CsvWriter::str() const {
  std::ostringstream os;
  auto emit = [&os](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      if (needs_quotes(row[i])) {
        os << '"';
        for (char c : row[i]) {
          if (c == '"') os << '"';
          os << c;
        }
        os << '"';
      } else {
        os << row[i];
      }
    }
    os << "\r\n";
  };
  emit(header_);
  for (const auto& r : rows_) emit(r);
  return os.str();
}

void CsvWriter::write(const std::filesystem::path& path) const { write_text_file(path, str()); }

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << contents;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace lieconv
