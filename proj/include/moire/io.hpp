#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace moire {

// 16 hex digits of FNV-1a over the compact dump; object keys are sorted, so
// equal configs hash equally.
std::string config_hash(const nlohmann::json& config);

// Header comment line stamped on every CSV output.
std::string stamp_line(const std::string& hash, std::uint64_t seed);

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace moire
