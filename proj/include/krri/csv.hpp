#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace krri {

/// Strict CSV: comma separator, mandatory header row, UTF-8, '.' decimal,
/// empty cell = missing. Fields may be double-quoted; no dialect sniffing.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or -1.
  int column(const std::string& name) const;
};

CsvTable parse_csv(std::istream& in);
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Strict double parse; throws MalformedCsv on anything but a full numeric
/// token.
double parse_double(const std::string& cell);

/// Shortest representation that round-trips exactly.
std::string format_double(double v);

}  // namespace krri
