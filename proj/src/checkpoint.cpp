#include "mtgn/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace mtgn {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'G', 'N', 'C', 'K', 'P', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void write_string(std::ofstream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in) {
  const auto n = read_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& meta_json) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  write_string(out, meta_json);
  write_u64(out, store.all().size());
  for (const auto& p : store.all()) {
    write_string(out, p->name);
    const auto& t = *p->value;
    write_u64(out, t.shape.size());
    for (auto s : t.shape) write_u64(out, static_cast<std::uint64_t>(s));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

namespace {

std::string load_impl(const std::string& path, ParamStore* store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != std::string(kMagic, 8)) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const std::string meta = read_string(in);
  if (!store) return meta;

  const auto count = read_u64(in);
  if (count != store->all().size()) {
    throw std::runtime_error("checkpoint: parameter count mismatch (" +
                             std::to_string(count) + " archived vs " +
                             std::to_string(store->all().size()) + " in model)");
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = read_string(in);
    if (!store->has(name)) {
      throw std::runtime_error("checkpoint: unknown parameter " + name);
    }
    auto t = store->get(name);
    const auto ndim = read_u64(in);
    std::vector<std::int64_t> shape(ndim);
    for (auto& s : shape) s = static_cast<std::int64_t>(read_u64(in));
    if (shape != t->shape) {
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    }
    in.read(reinterpret_cast<char*>(t->data.data()),
            static_cast<std::streamsize>(t->data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated payload for " + name);
  }
  return meta;
}

}  // namespace

std::string load_checkpoint(const std::string& path, ParamStore& store) {
  return load_impl(path, &store);
}

std::string read_checkpoint_meta(const std::string& path) {
  return load_impl(path, nullptr);
}

}  // namespace mtgn
