#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fusebox {

// Whole-file helpers; both throw IoError naming the path.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

}  // namespace fusebox
