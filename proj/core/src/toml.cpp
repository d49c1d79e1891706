#include "hopper/toml.hpp"

#include <fstream>
#include <sstream>

namespace hopper {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// strip a trailing comment that is not inside a string
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

nlohmann::json parse_scalar(const std::string& tok, size_t lineno) {
  const std::string v = trim(tok);
  if (v.empty()) throw TomlError("line " + std::to_string(lineno) + ": empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw TomlError("line " + std::to_string(lineno) + ": unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  try {
    size_t pos = 0;
    if (v.find_first_of(".eEinf") == std::string::npos) {
      const long long i = std::stoll(v, &pos);
      if (pos == v.size()) return i;
    }
    pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw TomlError("line " + std::to_string(lineno) + ": cannot parse value '" + v + "'");
}

nlohmann::json parse_value(const std::string& tok, size_t lineno) {
  const std::string v = trim(tok);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']')
      throw TomlError("line " + std::to_string(lineno) + ": unterminated array");
    nlohmann::json arr = nlohmann::json::array();
    std::string inner = v.substr(1, v.size() - 2);
    std::string cur;
    bool in_str = false;
    for (char c : inner) {
      if (c == '"') in_str = !in_str;
      if (c == ',' && !in_str) {
        if (!trim(cur).empty()) arr.push_back(parse_scalar(cur, lineno));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!trim(cur).empty()) arr.push_back(parse_scalar(cur, lineno));
    return arr;
  }
  return parse_scalar(v, lineno);
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw TomlError("line " + std::to_string(lineno) + ": malformed table header");
      const std::string path = trim(line.substr(1, line.size() - 2));
      if (path.empty())
        throw TomlError("line " + std::to_string(lineno) + ": empty table name");
      table = &root;
      std::string part;
      std::istringstream ps(path);
      while (std::getline(ps, part, '.')) {
        part = trim(part);
        if (part.empty())
          throw TomlError("line " + std::to_string(lineno) + ": empty table segment");
        table = &(*table)[part];
        if (table->is_null()) *table = nlohmann::json::object();
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw TomlError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw TomlError("line " + std::to_string(lineno) + ": empty key");
    (*table)[key] = parse_value(line.substr(eq + 1), lineno);
  }
  return root;
}

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TomlError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    return nlohmann::json::parse(text);
  return parse_toml(text);
}

}  // namespace hopper
