#include "hopper/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace hopper {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open csv file: " + path);
  CsvTable t;
  std::string line;
  size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size()) {
      std::ostringstream os;
      os << path << ":" << lineno << ": expected " << t.header.size()
         << " columns, got " << cells.size();
      throw CsvError(os.str());
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
      try {
        size_t pos = 0;
        row.push_back(std::stod(cells[i], &pos));
        if (pos != cells[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        std::ostringstream os;
        os << path << ":" << lineno << ": column '" << t.header[i]
           << "' is not numeric: '" << cells[i] << "'";
        throw CsvError(os.str());
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw CsvError("empty csv file: " + path);
  return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write csv file: " + path);
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i)
      out << (i ? "," : "") << format_double(r[i]);
    out << "\n";
  }
}

}  // namespace hopper
