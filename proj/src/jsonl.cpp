#include "splitqa/jsonl.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include "splitqa/error.hpp"

namespace splitqa::jsonl {

std::vector<nlohmann::json> read(std::istream& in) {
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t lineno = 0;
  std::string bad;
  std::size_t bad_line = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!bad.empty()) throw ParseError("line " + std::to_string(bad_line), bad);
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      bad = e.what();
      bad_line = lineno;
    }
  }
  return out;
}

std::vector<nlohmann::json> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read(in);
}

void write(std::ostream& out, const nlohmann::json& value) { out << value.dump() << '\n'; }

void write_file(const std::string& path, const std::vector<nlohmann::json>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  for (const auto& v : values) write(out, v);
}

double round6(double value) {
  if (!std::isfinite(value) || value == 0.0) return value == 0.0 ? 0.0 : value;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return std::strtod(buf, nullptr);
}

}  // namespace splitqa::jsonl
