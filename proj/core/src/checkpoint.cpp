#include "beam/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace beam {

namespace {

constexpr char kMagic[8] = {'B', 'E', 'A', 'M', 'C', 'K', 'P', '1'};

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw RuntimeError("truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& header_json,
                     const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot open checkpoint '" + path.string() + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  put<uint32_t>(out, static_cast<uint32_t>(header_json.size()));
  out.write(header_json.data(), static_cast<std::streamsize>(header_json.size()));
  put<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    put<uint32_t>(out, static_cast<uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<uint32_t>(out, static_cast<uint32_t>(t.shape.size()));
    int64_t n = 1;
    for (int d : t.shape) {
      put<int32_t>(out, d);
      n *= d;
    }
    if (n != static_cast<int64_t>(t.values.size()))
      throw RuntimeError("tensor '" + t.name + "' shape does not match payload");
    out.write(reinterpret_cast<const char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * 4));
  }
  if (!out) throw RuntimeError("short write to checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path.string() + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ValidationError("'" + path.string() + "' is not a beam checkpoint");
  Checkpoint ckpt;
  const uint32_t header_len = get<uint32_t>(in);
  ckpt.header_json.resize(header_len);
  in.read(ckpt.header_json.data(), header_len);
  const uint32_t n_tensors = get<uint32_t>(in);
  for (uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    const uint32_t name_len = get<uint32_t>(in);
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    const uint32_t ndim = get<uint32_t>(in);
    int64_t n = 1;
    for (uint32_t d = 0; d < ndim; ++d) {
      t.shape.push_back(get<int32_t>(in));
      n *= t.shape.back();
    }
    t.values.resize(static_cast<size_t>(n));
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(n * 4));
    if (!in) throw RuntimeError("truncated checkpoint '" + path.string() + "'");
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

const NamedTensor& Checkpoint::find(const std::string& name) const {
  for (const NamedTensor& t : tensors)
    if (t.name == name) return t;
  throw ValidationError("checkpoint tensor '" + name + "' not found");
}

}  // namespace beam
