#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dnsabuse {

// Whole-file read; throws Error(IoFailure) when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`, so readers never
// observe a partially written output.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split_lines(std::string_view text);

// Keeps empty fields: split("a..b", '.') == {"a", "", "b"}.
std::vector<std::string> split(std::string_view s, char sep);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

// RFC 4180 field splitting for one physical line. Quoted fields may contain
// commas and doubled quotes; embedded newlines are not supported.
std::vector<std::string> parse_csv_line(std::string_view line);

std::string csv_escape(std::string_view field);

template <typename Range>
std::string join(const Range& parts, std::string_view sep) {
  std::string out;
  bool first = true;
  for (const auto& p : parts) {
    if (!first) out += sep;
    out += p;
    first = false;
  }
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& fields);
  const std::string& str() const { return buffer_; }

 private:
  size_t columns_;
  std::string buffer_;
};

}  // namespace dnsabuse
