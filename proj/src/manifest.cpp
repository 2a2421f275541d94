#include "chartevo/manifest.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "chartevo/random.hpp"
#include "chartevo/types.hpp"

namespace chartevo {

InputDigest digest_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + file.string() + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return {file.string(), data.size(), hex};
}

std::vector<InputDigest> digest_tree(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<InputDigest> out;
  for (const auto& f : files) out.push_back(digest_file(f));
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j;
  j["format"] = "chartevo-manifest";
  j["version"] = 1;
  j["tool_version"] = m.tool_version;
  j["command"] = m.command;
  j["config"] = m.config;
  j["arguments"] = m.arguments;
  j["seed"] = m.seed;
  auto& inputs = j["inputs"] = nlohmann::json::array();
  for (const auto& d : m.inputs) {
    inputs.push_back({{"path", d.path}, {"bytes", d.bytes}, {"fnv1a64", d.fnv1a64}});
  }
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["status"] = m.status;
  return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::vector<std::string>>();
    m.config = j.at("config");
    m.arguments = j.value("arguments", nlohmann::json::object());
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& d : j.at("inputs")) {
      m.inputs.push_back({d.at("path").get<std::string>(), d.at("bytes").get<std::uint64_t>(),
                          d.at("fnv1a64").get<std::string>()});
    }
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.status = j.at("status").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifest: ") + e.what());
  }
}

void write_manifest(const std::filesystem::path& file, const RunManifest& m) {
  std::ofstream out(file);
  if (!out) throw FormatError("cannot write '" + file.string() + "'");
  out << to_json(m).dump(2) << '\n';
}

}  // namespace chartevo
