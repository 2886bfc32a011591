#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "translqr/errors.hpp"

namespace translqr::io {

// Write-to-temp then rename, so a failed run never leaves a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::vector<std::string> split_csv_line(const std::string& line);

double parse_double(const std::string& token, const std::filesystem::path& origin);

} // namespace translqr::io
