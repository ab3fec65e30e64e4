#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "subterra/geometry.hpp"

namespace subterra {

/// Parses JSON text; syntax errors become ParseError with a line number.
nlohmann::json parse_json_document(std::string_view text, std::string_view what);

std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temporary sibling file and rename, so readers never see a
/// partially written file.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

// Field accessors. Missing or mistyped fields raise ParseError naming the
// field path ("<prefix>.<key>").
double require_number(const nlohmann::json& obj, std::string_view key, std::string_view prefix = {});
double optional_number(const nlohmann::json& obj, std::string_view key, double fallback,
                       std::string_view prefix = {});
std::int64_t require_integer(const nlohmann::json& obj, std::string_view key, std::string_view prefix = {});
std::string require_string(const nlohmann::json& obj, std::string_view key, std::string_view prefix = {});
std::vector<std::int64_t> require_int_array(const nlohmann::json& obj, std::string_view key, std::size_t length,
                                            std::string_view prefix = {});
Vec3 require_vec3(const nlohmann::json& obj, std::string_view key, std::string_view prefix = {});
std::vector<std::string> require_string_array(const nlohmann::json& obj, std::string_view key,
                                              std::string_view prefix = {});

nlohmann::json to_json(const Vec3& v);

/// Rounds to 1e-6 so log timestamps print compactly (0.3, not 0.30000000000000004).
double round_micro(double value);

}  // namespace subterra
