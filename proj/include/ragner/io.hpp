#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ragner::io {

/// Throws Error(IoError).
std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename. Creates parent directories.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ragner::io
