// Copyright 2026 The p2be Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace p2be {

/// Seed for an independent stream named `label` (plus an index such as an
/// epoch or sample number) under one run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (char c : label) {
    h ^= std::uint8_t(c);
    h *= 0x100000001b3ull;
  }
  auto mix = [](std::uint64_t z) {  // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ h) ^ index);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(seed, label, index));
}

}  // namespace p2be
