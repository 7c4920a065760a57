#pragma once

#include <string>

namespace satgan {

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace satgan
