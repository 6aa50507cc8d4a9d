#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace dreamcc {

// All randomness flows through explicitly seeded streams; nothing reads
// global state. Streams are derived from (root seed, role name) so adding
// a new consumer never perturbs existing ones.
using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t root, std::string_view role) {
  uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the role name
  for (char c : role) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return splitmix64(root ^ splitmix64(h));
}

inline Rng make_stream(uint64_t root, std::string_view role) {
  return Rng(derive_seed(root, role));
}

// mt19937_64 state round-trips through its stream operators; used to make
// checkpoints resume mid-stream.
std::string rng_to_string(const Rng& rng);
Rng rng_from_string(const std::string& s);

}  // namespace dreamcc
