#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace gpe {

/// Shortest decimal string that parses back to exactly x; "nan", "inf"
/// and "-inf" for non-finite values.
std::string format_double(double x);

/// RFC 3339 UTC time of the call, used for output header lines.
std::string utc_timestamp();

/// CSV text with '#'-prefixed header comment lines, a column row and data rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_comment(const std::string& line);
  void add_row(const std::vector<std::string>& cells);
  std::string str() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace gpe
