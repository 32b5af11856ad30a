#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fearfactor::cli {

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// key=value run record: stage, code version, UTC timestamp, input and output hashes,
/// then the config echo. Written through a temporary file and renamed.
void write_manifest(const std::filesystem::path& path, const std::string& stage,
                    const std::vector<std::filesystem::path>& inputs, const std::vector<std::filesystem::path>& outputs,
                    const std::string& config_echo);

}  // namespace fearfactor::cli
