#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace gnep::io {

/// Shortest round-trip-safe text for doubles: 17 significant digits.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Comma-separated rows under a header; `#` lines carry metadata.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& comment(const std::string& text) {
    out_ << "# " << text << '\n';
    return *this;
  }

  CsvWriter& header(const std::vector<std::string>& columns) {
    columns_ = columns.size();
    write(columns);
    return *this;
  }

  /// Starts a row; cells are appended with `<<` and closed by `end()`.
  CsvWriter& cell(const std::string& s) {
    cells_.push_back(quote(s));
    return *this;
  }
  CsvWriter& cell(double v) {
    cells_.push_back(format_double(v));
    return *this;
  }
  CsvWriter& cell(int v) {
    cells_.push_back(std::to_string(v));
    return *this;
  }
  CsvWriter& cell(bool v) {
    cells_.push_back(v ? "1" : "0");
    return *this;
  }
  template <typename T>
  CsvWriter& operator<<(const T& v) {
    return cell(v);
  }
  CsvWriter& operator<<(const char* s) { return cell(std::string(s)); }

  void end() {
    if (columns_ != 0 && cells_.size() != columns_)
      throw std::logic_error("csv row has " + std::to_string(cells_.size()) + " cells, header has " +
                             std::to_string(columns_));
    for (std::size_t i = 0; i < cells_.size(); ++i) out_ << (i ? "," : "") << cells_[i];
    out_ << '\n';
    cells_.clear();
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }

  void write(const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out_ << (i ? "," : "") << quote(row[i]);
    out_ << '\n';
  }

  std::ostream& out_;
  std::size_t columns_ = 0;
  std::vector<std::string> cells_;
};

}  // namespace gnep::io
