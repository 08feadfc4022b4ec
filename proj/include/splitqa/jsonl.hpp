#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace splitqa::jsonl {

// Reads one JSON object per line. A final line that does not parse (a torn
// write from an interrupted run) is dropped; a bad line elsewhere throws
// ParseError naming the line number.
std::vector<nlohmann::json> read(std::istream& in);
std::vector<nlohmann::json> read_file(const std::string& path);

void write(std::ostream& out, const nlohmann::json& value);
void write_file(const std::string& path, const std::vector<nlohmann::json>& values);

// Rounds to 6 significant digits so serialized artifacts are stable.
double round6(double value);

}  // namespace splitqa::jsonl
