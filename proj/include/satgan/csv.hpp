#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace satgan {

/// Shortest round-trip decimal form; "nan" and "inf" for non-finite values.
std::string format_number(double v);
std::string format_number(float v);

/// Writes one comma-separated row followed by '\n'.
void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);

/// Splits a comma-separated file (no quoting) into rows of cells.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace satgan
