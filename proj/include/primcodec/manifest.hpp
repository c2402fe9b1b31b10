#ifndef PRIMCODEC_MANIFEST_HPP_
#define PRIMCODEC_MANIFEST_HPP_

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace primcodec
{

/// Git-style blob hash ("blob <len>\0" + content, SHA-1 hex) of a file.
std::string content_hash(const std::string& path);

struct RunManifest
{
  std::string command;
  nlohmann::json config;
  std::map<std::string, std::string> input_hashes;  // path -> sha1
  std::vector<std::string> outputs;
  double wall_clock_sec = 0.0;
  std::string artifact_version = "1.0.0";
};

/// Writes dir/manifest.json. Every listed output must exist.
void write_manifest(const RunManifest& manifest, const std::string& dir);

}  // namespace primcodec

#endif  // PRIMCODEC_MANIFEST_HPP_
