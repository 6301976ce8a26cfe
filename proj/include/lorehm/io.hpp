#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace lorehm::io {

using Json = nlohmann::json;

// Calls `visit(line_number, json)` for every non-blank line; line numbers are
// 1-based. Parse errors are rethrown as lorehm::Error naming `source` and line.
void for_each_json_line(std::istream& in, std::string_view source,
                        const std::function<void(std::size_t, const Json&)>& visit);
void for_each_json_line(const std::filesystem::path& path,
                        const std::function<void(std::size_t, const Json&)>& visit);

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

void append_line(const std::filesystem::path& path, std::string_view line);

// Compact single-line dump used for every JSONL artifact.
std::string dump_line(const Json& value);

} // namespace lorehm::io
