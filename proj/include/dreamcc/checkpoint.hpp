#pragma once

// Versioned binary container for named tensors (little-endian):
//
//   magic   8 bytes  "DCCKPT\0\0"
//   version u32      currently 1
//   count   u32
//   entry*  count times:
//     name_len u32, name bytes
//     dtype    u8   (0 = f32, 1 = f64)
//     ndim     u8
//     dims     i64 * ndim
//     data     raw values, numel * sizeof(dtype)
//
// Parameters are stored as three entries each: "<name>", "<name>/adam_m",
// "<name>/adam_v", plus a scalar "<name>/adam_t" holding the step count.

#include <string>
#include <vector>

#include "dreamcc/optim.hpp"
#include "dreamcc/tensor.hpp"

namespace dreamcc {

inline constexpr uint32_t kCheckpointVersion = 1;

struct NamedBuffer {
  std::string name;
  Shape shape;
  Buffer data;
};

void write_container(const std::string& path, const std::vector<NamedBuffer>& entries);
// Throws LoadError on missing file, bad magic, or unsupported version.
std::vector<NamedBuffer> read_container(const std::string& path);

// Parameters + optimizer moments by name.
std::vector<NamedBuffer> pack_params(const std::vector<Parameter*>& params);
void unpack_params(const std::vector<NamedBuffer>& entries,
                   const std::vector<Parameter*>& params);

void save_params(const std::string& path, const std::vector<Parameter*>& params);
void load_params(const std::string& path, const std::vector<Parameter*>& params);

}  // namespace dreamcc
