#include "convexpde/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "convexpde/errors.hpp"

namespace cpde {

Eigen::Index CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<Eigen::Index>(i);
  throw ConfigError("csv: no column named '" + name + "'");
}

std::string format_csv(const CsvTable& t) {
  if (static_cast<Eigen::Index>(t.header.size()) != t.rows.cols())
    throw DimensionMismatch("csv: header and row width differ");
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
  out += '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < t.rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.rows.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", t.rows(r, c));
      if (c) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const CsvTable& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("csv: cannot write " + path);
  out << format_csv(t);
  if (!out) throw ConfigError("csv: write failed for " + path);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t\r");
    const auto e = item.find_last_not_of(" \t\r");
    f.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') f.emplace_back();
  return f;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CsvTable t;
  while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
  }
  if (line.find_first_not_of(" \t\r") == std::string::npos) throw ConfigError("csv: missing header");
  t.header = split(line);
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split(line);
    if (f.size() != t.header.size())
      throw ConfigError("csv: line " + std::to_string(lineno) + " has the wrong number of fields");
    std::vector<double> row;
    for (const auto& s : f) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (s.empty() || used != s.size())
        throw ConfigError("csv: line " + std::to_string(lineno) + ": '" + s + "' is not a number");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  t.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      t.rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("csv: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace cpde
