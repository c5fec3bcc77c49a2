#pragma once

#include <string>
#include <string_view>

namespace como::pipeline {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
/// Throws IoError when the file cannot be read.
std::string sha256_file(const std::string& path);

std::string read_file(const std::string& path);
/// Writes atomically via a temporary sibling; creates parent directories.
void write_file(const std::string& path, std::string_view data);

}  // namespace como::pipeline
