#include "iur/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace iur::checkpoint {

namespace {

constexpr char kMagic[8] = {'I', 'U', 'R', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_i64(std::ostream& os, std::int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_string(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::int64_t read_i64(std::istream& is) {
  std::int64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::string read_string(std::istream& is) {
  const std::uint64_t len = read_u64(is);
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  return s;
}

}  // namespace

void save(const std::string& path, const Model& model, std::int64_t step,
          const std::string& rng_state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, sizeof(kMagic));
  write_u32(os, kVersion);
  write_string(os, model.cfg.to_text());

  const auto& tokens = model.vocab.all_tokens();
  write_u64(os, tokens.size());
  for (const auto& t : tokens) write_string(os, t);

  write_u64(os, model.params.items().size());
  for (const auto& [name, tensor] : model.params.items()) {
    write_string(os, name);
    write_u32(os, static_cast<std::uint32_t>(tensor->shape.size()));
    for (int d : tensor->shape) write_u32(os, static_cast<std::uint32_t>(d));
    write_u64(os, tensor->value.size());
    os.write(reinterpret_cast<const char*>(tensor->value.data()),
             static_cast<std::streamsize>(tensor->value.size() * sizeof(double)));
  }

  write_i64(os, step);
  write_string(os, rng_state);
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Loaded load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version in " + path);

  const config::RunConfig cfg = config::RunConfig::from_text(read_string(is), path);

  const std::uint64_t n_tokens = read_u64(is);
  std::vector<std::string> tokens;
  tokens.reserve(n_tokens);
  for (std::uint64_t i = 0; i < n_tokens; ++i) tokens.push_back(read_string(is));

  Loaded out{Model::create(cfg, corpus::Vocab::from_tokens(tokens)), 0, ""};

  const std::uint64_t n_params = read_u64(is);
  if (n_params != out.model.params.items().size())
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  for (std::uint64_t i = 0; i < n_params; ++i) {
    const std::string name = read_string(is);
    const auto tensor = out.model.params.get(name);
    const std::uint32_t ndims = read_u32(is);
    std::vector<int> shape(ndims);
    for (auto& d : shape) d = static_cast<int>(read_u32(is));
    if (shape != tensor->shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    const std::uint64_t count = read_u64(is);
    if (count != tensor->value.size())
      throw std::runtime_error("checkpoint: size mismatch for " + name);
    is.read(reinterpret_cast<char*>(tensor->value.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  }

  out.step = read_i64(is);
  out.rng_state = read_string(is);
  if (!is) throw std::runtime_error("checkpoint: truncated file " + path);
  return out;
}

}  // namespace iur::checkpoint
