#include "mtgn/manifest.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace mtgn {

namespace {

std::uint64_t fnv1a64(const char* data, std::size_t n, std::uint64_t h) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

}  // namespace

std::string bytes_digest(const std::string& bytes) {
  return hex(fnv1a64(bytes.data(), bytes.size(), kFnvOffset));
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("file_digest: cannot open " + path);
  std::uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return hex(h);
}

std::string RunManifest::run_id() const {
  std::string material = command + '\n' + config_json + '\n';
  for (const auto& [path, digest] : inputs) material += path + '=' + digest + '\n';
  material += std::to_string(seed);
  return bytes_digest(material);
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config_json.empty() ? nlohmann::json()
                                    : nlohmann::json::parse(config_json);
  for (const auto& [path, digest] : inputs) j["inputs"][path] = digest;
  j["outputs"] = outputs;
  j["seed"] = seed;
  j["wall_seconds"] = wall_seconds;
  j["run_id"] = run_id();
  return j.dump(2);
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot open " + path);
  out << to_json() << '\n';
}

}  // namespace mtgn
