#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rnode {

/* All output files go through write-then-rename so a crashed or interrupted
 * run never leaves a partial file at the destination path.  */
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// Shortest decimal form that round-trips the exact double (std::to_chars).
std::string format_double(double v);

// Strict full-string parse; throws config_error on trailing garbage.
double parse_double(std::string_view s);
long parse_long(std::string_view s);

}  // namespace rnode
