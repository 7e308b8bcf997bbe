#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mtgn {

/// FNV-1a 64 over a file's bytes, hex-encoded.
std::string file_digest(const std::string& path);
std::string bytes_digest(const std::string& bytes);

/// One manifest per artifact-producing command: enough to reproduce the run.
struct RunManifest {
  std::string command;
  std::string config_json;
  std::vector<std::pair<std::string, std::string>> inputs;  // path -> digest
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  /// Deterministic id derived from command, config, inputs and seed (wall
  /// clock excluded so reruns agree).
  std::string run_id() const;
  std::string to_json() const;
  void write(const std::string& path) const;
};

}  // namespace mtgn
