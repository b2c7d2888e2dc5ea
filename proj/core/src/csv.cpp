#include "anderson/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "anderson/errors.hpp"

namespace anderson {

std::string format_double(double x) {
  // shortest representation that parses back to the same double
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, result.ptr);
}

namespace {

std::string format_cell(const CsvCell& cell) {
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  return std::get<std::string>(cell);
}

}  // namespace

CsvWriter::CsvWriter(std::string path, std::vector<std::string> columns)
    : path_(std::move(path)), columns_(std::move(columns)) {}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
    // destructor must not throw; call close() explicitly to observe failures
  }
}

void CsvWriter::meta(const std::string& key, const std::string& value) {
  if (data_started_) throw IoError("meta() after begin_data() in " + path_);
  buffer_ += "# " + key + ": " + value + "\n";
}

void CsvWriter::begin_data() {
  if (data_started_) return;
  data_started_ = true;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i > 0) buffer_ += ',';
    buffer_ += columns_[i];
  }
  buffer_ += '\n';
}

void CsvWriter::row(std::initializer_list<CsvCell> cells) {
  row(std::vector<CsvCell>(cells));
}

void CsvWriter::row(const std::vector<CsvCell>& cells) {
  if (!data_started_) begin_data();
  if (cells.size() != columns_.size()) {
    throw IoError("row arity mismatch in " + path_);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) buffer_ += ',';
    buffer_ += format_cell(cells[i]);
  }
  buffer_ += '\n';
}

void CsvWriter::close() {
  if (closed_) return;
  begin_data();
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path_);
  out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path_);
  closed_ = true;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace anderson
