// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace molswap::io {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file, flushes, then renames over the target,
// so readers only ever observe the old or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Appends one line with a single write(2) on an O_APPEND descriptor.
void append_line(const std::filesystem::path& path, std::string_view line);

// Dataset files: one entry per line, '#' starts a comment line, blank lines
// are skipped. Returns (line number, trimmed text).
struct DatasetLine {
  std::size_t line_number;
  std::string text;
};
std::vector<DatasetLine> read_dataset_lines(const std::filesystem::path& path);
std::vector<DatasetLine> split_dataset_lines(std::string_view content);

std::string trim(std::string_view s);

}  // namespace molswap::io
