#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ccr {

using Json = nlohmann::json;

/// Calls fn(object, line_number) for every non-blank line. Parse failures
/// raise DataError naming the file and 1-based line.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn);

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// Typed field access with DataError on absence or wrong type.
std::string require_string(const Json& obj, const char* key, std::size_t line);
double require_number(const Json& obj, const char* key, std::size_t line);

}  // namespace ccr
