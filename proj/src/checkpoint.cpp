#include "dreamcc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "dreamcc/errors.hpp"

namespace dreamcc {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'C', 'K', 'P', 'T', '\0', '\0'};

template <class T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw LoadError("checkpoint: truncated file");
  return v;
}

}  // namespace

void write_container(const std::string& path, const std::vector<NamedBuffer>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw LoadError("checkpoint: cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(os, kCheckpointVersion);
  write_pod<uint32_t>(os, static_cast<uint32_t>(entries.size()));
  for (const auto& e : entries) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_pod<uint8_t>(os, static_cast<uint8_t>(e.data.dtype()));
    write_pod<uint8_t>(os, static_cast<uint8_t>(e.shape.size()));
    for (int64_t d : e.shape) write_pod<int64_t>(os, d);
    const int64_t n = e.data.size();
    if (n != numel(e.shape))
      throw UsageError("checkpoint: entry " + e.name + " shape/data mismatch");
    if (e.data.dtype() == DType::kF32)
      os.write(reinterpret_cast<const char*>(e.data.f32()),
               static_cast<std::streamsize>(n * 4));
    else
      os.write(reinterpret_cast<const char*>(e.data.f64()),
               static_cast<std::streamsize>(n * 8));
  }
  if (!os) throw LoadError("checkpoint: write failed: " + path);
}

std::vector<NamedBuffer> read_container(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw LoadError("checkpoint: bad magic in " + path);
  const uint32_t version = read_pod<uint32_t>(is);
  if (version != kCheckpointVersion)
    throw LoadError("checkpoint: unsupported version " + std::to_string(version) + " in " +
                    path + " (expected " + std::to_string(kCheckpointVersion) + ")");
  const uint32_t count = read_pod<uint32_t>(is);
  std::vector<NamedBuffer> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    NamedBuffer e;
    const uint32_t name_len = read_pod<uint32_t>(is);
    e.name.resize(name_len);
    is.read(e.name.data(), name_len);
    const uint8_t dt = read_pod<uint8_t>(is);
    if (dt > 1) throw LoadError("checkpoint: bad dtype tag in " + path);
    const uint8_t ndim = read_pod<uint8_t>(is);
    e.shape.resize(ndim);
    for (uint8_t d = 0; d < ndim; ++d) e.shape[d] = read_pod<int64_t>(is);
    const int64_t n = numel(e.shape);
    e.data = Buffer(static_cast<DType>(dt), n);
    if (e.data.dtype() == DType::kF32)
      is.read(reinterpret_cast<char*>(e.data.f32()), static_cast<std::streamsize>(n * 4));
    else
      is.read(reinterpret_cast<char*>(e.data.f64()), static_cast<std::streamsize>(n * 8));
    if (!is) throw LoadError("checkpoint: truncated entry " + e.name + " in " + path);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<NamedBuffer> pack_params(const std::vector<Parameter*>& params) {
  std::vector<NamedBuffer> entries;
  entries.reserve(params.size() * 4);
  for (const Parameter* p : params) {
    entries.push_back({p->name, p->value.shape(), p->value.buffer().clone()});
    entries.push_back({p->name + "/adam_m", p->value.shape(), p->adam_m.clone()});
    entries.push_back({p->name + "/adam_v", p->value.shape(), p->adam_v.clone()});
    Buffer t(DType::kF64, 1);
    t.set(0, static_cast<double>(p->step_count));
    entries.push_back({p->name + "/adam_t", Shape{}, std::move(t)});
  }
  return entries;
}

void unpack_params(const std::vector<NamedBuffer>& entries,
                   const std::vector<Parameter*>& params) {
  std::map<std::string, const NamedBuffer*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  auto fetch = [&](const std::string& name) -> const NamedBuffer& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw LoadError("checkpoint: missing entry " + name);
    return *it->second;
  };
  for (Parameter* p : params) {
    const NamedBuffer& v = fetch(p->name);
    if (v.shape != p->value.shape() || v.data.dtype() != p->value.dtype())
      throw LoadError("checkpoint: entry " + p->name + " has shape " + shape_str(v.shape) +
                      ", expected " + shape_str(p->value.shape()));
    p->value.node()->value = v.data.clone();
    p->adam_m = fetch(p->name + "/adam_m").data.clone();
    p->adam_v = fetch(p->name + "/adam_v").data.clone();
    p->step_count = static_cast<int64_t>(fetch(p->name + "/adam_t").data.get(0));
  }
}

void save_params(const std::string& path, const std::vector<Parameter*>& params) {
  write_container(path, pack_params(params));
}

void load_params(const std::string& path, const std::vector<Parameter*>& params) {
  unpack_params(read_container(path), params);
}

}  // namespace dreamcc
