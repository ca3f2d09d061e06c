#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace utweak {

/// Version stamped into every JSON document and CSV sidecar.
inline constexpr int kSchemaVersion = 1;

/// Writes bytes to a file, creating parent directories. Throws Error.
void write_text(const std::filesystem::path& path, std::string_view content);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Reads a whole file. Throws Error.
std::string read_text(const std::filesystem::path& path);

/// Parses JSON text; syntax errors are reported with line and column.
nlohmann::json parse_json(const std::string& text, const std::string& origin);

}  // namespace utweak
