#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace telerank {

// Writes to a sibling temp file, fsyncs, then renames over `path`, so
// readers observe either the old or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace telerank
