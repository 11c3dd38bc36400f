#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gvse {

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
void write_binary_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

struct CsvRow {
  std::size_t line = 0;  // 1-based source line
  std::vector<std::string> cells;
};

// Comma-separated, no quoting. Blank lines and lines starting with '#' are skipped.
std::vector<CsvRow> parse_csv_rows(std::string_view text);

double parse_double(std::string_view cell, std::size_t line);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Little-endian encoding helpers for the binary formats.
class ByteWriter {
 public:
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void raw(std::string_view bytes);
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string context);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string raw(std::size_t n);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n);
  const std::vector<std::uint8_t>& bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

}  // namespace gvse
