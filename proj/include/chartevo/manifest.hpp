#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace chartevo {

struct InputDigest {
  std::string path;
  std::uint64_t bytes = 0;
  /// fnv1a64 of the file contents, hex.
  std::string fnv1a64;
};

struct RunManifest {
  std::string tool_version = CHARTEVO_VERSION;
  std::vector<std::string> command;
  nlohmann::json config;
  /// Subcommand paths and flags, as given.
  nlohmann::json arguments = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<InputDigest> inputs;
  std::string started_at;
  std::string finished_at;
  std::string status = "running";
};

InputDigest digest_file(const std::filesystem::path& file);
/// Digests every regular file under `dir`, sorted by path.
std::vector<InputDigest> digest_tree(const std::filesystem::path& dir);

/// UTC, ISO 8601 with seconds.
std::string utc_timestamp();

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const std::filesystem::path& file, const RunManifest& m);

}  // namespace chartevo
