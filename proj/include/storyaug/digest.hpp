#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace storyaug {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path &path);

/// Digest over every regular file below dir: sha256 of the sorted
/// "relative-path\tfile-digest\n" lines.
std::string directory_digest(const std::filesystem::path &dir);

} // namespace storyaug
