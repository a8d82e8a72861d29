#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace temario {

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view contents);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& value);

std::string read_file(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace temario
