#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ocfl {

using Rng = std::mt19937_64;

// splitmix64 finalizer, decorrelates nearby seed values
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stable child seed from a root seed and a purpose tag.
// FNV-1a over the tag bytes, then splitmix64 over the combination; the scheme
// is fixed so ports in other languages can reproduce the seeding structure.
inline uint64_t derive_seed(uint64_t root, std::string_view tag) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return mix64(root ^ mix64(h));
}

inline Rng make_rng(uint64_t root, std::string_view tag) {
  return Rng(derive_seed(root, tag));
}

}  // namespace ocfl
