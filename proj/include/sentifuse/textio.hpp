#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sentifuse::textio {

std::string trim(std::string_view text);
std::string to_lower_ascii(std::string_view text);

/// Splits on the delimiter; no quoting rules (none of our formats use them).
std::vector<std::string> split(std::string_view line, char delim);

std::string read_file(const std::string& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written file.
void write_file_atomic(const std::string& path, std::string_view content);

bool file_exists(const std::string& path);

} // namespace sentifuse::textio
