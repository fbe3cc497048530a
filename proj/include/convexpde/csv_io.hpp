#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cpde {

/// Numeric table with named columns.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd rows;  // one row per record

  Eigen::Index column(const std::string& name) const;  // throws ConfigError
};

/// Writes `table` with every value printed as %.17g, so that a fixed
/// computation yields identical bytes.
void write_csv(const std::string& path, const CsvTable& table);
std::string format_csv(const CsvTable& table);

/// Reads a header line and numeric rows. Throws ConfigError on ragged rows,
/// non-numeric fields or unreadable files.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

}  // namespace cpde
