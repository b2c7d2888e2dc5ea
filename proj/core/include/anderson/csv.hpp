#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <variant>
#include <vector>

namespace anderson {

/// One CSV cell: integer, double, or verbatim string.
using CsvCell = std::variant<long long, double, std::string>;

/// Formats a double with "%.17g": shortest representation that round-trips
/// exactly, so emitted files are byte-stable and lossless.
std::string format_double(double x);

/// Plain-column CSV with a '#'-prefixed metadata header. Layout:
///   # key: value          (meta lines)
///   col_a,col_b,...       (header row)
///   1,0.25,...            (data rows)
/// Writing is buffered; the file appears atomically on flush (close).
class CsvWriter {
 public:
  CsvWriter(std::string path, std::vector<std::string> columns);
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  /// Adds one "# key: value" meta line; only valid before begin_data().
  void meta(const std::string& key, const std::string& value);

  /// Emits the header row; rows may follow.
  void begin_data();

  void row(std::initializer_list<CsvCell> cells);
  void row(const std::vector<CsvCell>& cells);

  /// Writes the buffered content to disk. Called by the destructor, but an
  /// explicit call surfaces IoError instead of swallowing it.
  void close();

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<std::string> columns_;
  std::string buffer_;
  bool data_started_ = false;
  bool closed_ = false;
};

/// FNV-1a 64-bit over a byte string; the manifest's content hash.
std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

/// Reads a whole file, throwing IoError on failure.
std::string read_file_bytes(const std::string& path);

}  // namespace anderson
