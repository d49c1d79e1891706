#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hopper {

// All floats go out with 17 significant digits so reruns are byte-identical.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric CSV with a header row. Throws CsvError naming the offending
// line/column on malformed input.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace hopper
